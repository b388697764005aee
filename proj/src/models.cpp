#include "abcrf/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "abcrf/parallel.hpp"
#include "abcrf/rng.hpp"

namespace abcrf {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_mean(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v;
  return s / static_cast<double>(y.size());
}

// Sum of squared deviations about the mean.
double sum_sq_dev(std::span<const double> y, double mean) {
  double s = 0.0;
  for (double v : y) s += (v - mean) * (v - mean);
  return s;
}

}  // namespace

NormalToyModel::NormalToyModel(int n_, int noise_dims_, std::uint64_t seed_)
    : n(n_), noise_dims(noise_dims_), seed(seed_) {
  if (n < 2) throw ConfigError("NormalToyModel requires n >= 2");
  if (noise_dims < 0) throw ConfigError("NormalToyModel requires noise_dims >= 0");
}

std::vector<std::string> NormalToyModel::param_names() { return {"theta1", "theta2"}; }

std::vector<std::string> NormalToyModel::stat_names() const {
  std::vector<std::string> names = {"mean",
                                    "variance",
                                    "mad",
                                    "mean_plus_variance",
                                    "mean_plus_mad",
                                    "variance_plus_mad",
                                    "mean_times_variance",
                                    "mean_times_mad",
                                    "variance_times_mad",
                                    "sum_mean_variance_mad",
                                    "prod_mean_variance_mad"};
  for (int i = 1; i <= noise_dims; ++i) names.push_back("noise" + std::to_string(i));
  return names;
}

ReferenceTable simulate_normal_toy(const NormalToyModel& model, std::size_t count,
                                   int threads, std::uint64_t substream) {
  if (count < 1) throw ConfigError("simulate_normal_toy requires count >= 1");
  const std::size_t k = static_cast<std::size_t>(model.stat_count());
  std::vector<double> params(count * 2);
  std::vector<double> stats(count * k);

  parallel_for(count, threads, [&](std::size_t row) {
    Rng rng(derive_seed(model.seed, "normal-toy-row", row, substream));
    const double theta2 = rng.inverse_gamma(4.0, 3.0);
    const double theta1 = std::sqrt(theta2) * rng.normal();
    std::vector<double> y(model.n);
    for (double& v : y) v = theta1 + std::sqrt(theta2) * rng.normal();

    const double mean = sample_mean(y);
    const double variance = sum_sq_dev(y, mean) / (model.n - 1);
    std::vector<double> dev(y);
    const double med = median_inplace(dev);
    for (std::size_t i = 0; i < dev.size(); ++i) dev[i] = std::fabs(y[i] - med);
    const double mad = median_inplace(dev);

    params[row * 2] = theta1;
    params[row * 2 + 1] = theta2;
    double* s = stats.data() + row * k;
    s[0] = mean;
    s[1] = variance;
    s[2] = mad;
    s[3] = mean + variance;
    s[4] = mean + mad;
    s[5] = variance + mad;
    s[6] = mean * variance;
    s[7] = mean * mad;
    s[8] = variance * mad;
    s[9] = mean + variance + mad;
    s[10] = mean * variance * mad;
    for (int j = 0; j < model.noise_dims; ++j) s[11 + j] = rng.uniform01();
  });

  return ReferenceTable(NormalToyModel::param_names(), model.stat_names(), std::move(params),
                        std::move(stats));
}

NormalToyPosterior normal_toy_posterior_from_stats(int n, double mean, double variance) {
  if (n < 2) throw ConfigError("normal toy posterior requires n >= 2");
  const double nd = n;
  const double ybar = mean;
  const double s2 = variance * (nd - 1.0);
  // Reference closed forms for this benchmark model:
  //   t1 | y ~ T(n + 8, n*ybar/(n+1), (s2 + 6)/((n+1)(n+8)))
  //   t2 | y ~ IG(n/2 + 4, s2/2 + 3)
  // with s2 the sum of squared deviations.
  const double lambda = 3.0 + 0.5 * s2;
  const double nu = nd + 8.0;
  const double loc = nd * ybar / (nd + 1.0);
  const double scale2 = (s2 + 6.0) / ((nd + 1.0) * nu);
  return {StudentT(nu, loc, scale2), InverseGamma(nd / 2.0 + 4.0, lambda)};
}

NormalToyPosterior normal_toy_exact(std::span<const double> y_sample) {
  const int n = static_cast<int>(y_sample.size());
  if (n < 2) throw ConfigError("normal_toy_exact requires n >= 2");
  const double mean = sample_mean(y_sample);
  const double variance = sum_sq_dev(y_sample, mean) / (n - 1);
  return normal_toy_posterior_from_stats(n, mean, variance);
}

ZellnerModel::ZellnerModel(int n, int noise_dims, std::uint64_t seed)
    : n_(n), noise_dims_(noise_dims), seed_(seed) {
  if (n_ < 3) throw ConfigError("ZellnerModel requires n >= 3");
  if (noise_dims_ < 0) throw ConfigError("ZellnerModel requires noise_dims >= 0");
  // Fixed design with correlated columns: rows iid N2(0, [[1, r], [r, 1]]),
  // r = 0.7. Independent columns would make X'X near-orthogonal and the
  // posterior covariance between the coefficients indistinguishable from
  // zero, which is the quantity this model exists to exercise.
  design_.resize(static_cast<std::size_t>(n_) * 2);
  Rng rng(derive_seed(seed_, "zellner-design"));
  const double rho = 0.7;
  for (int i = 0; i < n_; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    design_[static_cast<std::size_t>(i) * 2] = z1;
    design_[static_cast<std::size_t>(i) * 2 + 1] = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> x(
      design_.data(), n_, 2);
  const Eigen::Matrix2d xtx = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(xtx);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(1);
  if (!(lo > 0.0) || !std::isfinite(hi / lo) || hi / lo > 1e12)
    throw ConfigError("ZellnerModel design has singular or near-singular X'X");
}

std::vector<std::string> ZellnerModel::param_names() { return {"beta1", "beta2", "sigma2"}; }

std::vector<std::string> ZellnerModel::stat_names() const {
  std::vector<std::string> names = {"beta1_hat", "beta2_hat", "rss",   "cov_y_x1",
                                    "corr_y_x1", "cov_y_x2",  "corr_y_x2", "mean_y",
                                    "var_y",     "median_y"};
  for (int i = 1; i <= noise_dims_; ++i) names.push_back("noise" + std::to_string(i));
  return names;
}

ReferenceTable simulate_zellner(const ZellnerModel& model, std::size_t count, int threads,
                                std::uint64_t substream) {
  if (count < 1) throw ConfigError("simulate_zellner requires count >= 1");
  const int n = model.n();
  const std::size_t k = static_cast<std::size_t>(model.stat_count());

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> x(
      model.design().data(), n, 2);
  const Eigen::Matrix2d xtx = x.transpose() * x;
  const Eigen::Matrix2d xtx_inv = xtx.inverse();
  const Eigen::Matrix2d chol = Eigen::LLT<Eigen::Matrix2d>(xtx_inv).matrixL();

  // Column moments of the fixed design, reused by every row.
  Eigen::Vector2d xbar = x.colwise().mean();
  Eigen::Vector2d x_sd;
  for (int j = 0; j < 2; ++j)
    x_sd(j) = std::sqrt((x.col(j).array() - xbar(j)).square().sum() / (n - 1));

  std::vector<double> params(count * 3);
  std::vector<double> stats(count * k);

  parallel_for(count, threads, [&](std::size_t row) {
    Rng rng(derive_seed(model.seed(), "zellner-row", row, substream));
    const double sigma2 = rng.inverse_gamma(4.0, 3.0);
    Eigen::Vector2d z(rng.normal(), rng.normal());
    const Eigen::Vector2d beta = std::sqrt(n * sigma2) * (chol * z);
    Eigen::VectorXd y(n);
    const double sd = std::sqrt(sigma2);
    for (int i = 0; i < n; ++i) y(i) = x.row(i).dot(beta) + sd * rng.normal();

    const Eigen::Vector2d beta_hat = xtx_inv * (x.transpose() * y);
    const Eigen::VectorXd resid = y - x * beta_hat;
    const double rss = resid.squaredNorm();
    const double mean_y = y.mean();
    const Eigen::ArrayXd yc = y.array() - mean_y;
    const double var_y = yc.square().sum() / (n - 1);
    const double sd_y = std::sqrt(var_y);
    double cov[2], corr[2];
    for (int j = 0; j < 2; ++j) {
      cov[j] = (yc * (x.col(j).array() - xbar(j))).sum() / (n - 1);
      corr[j] = cov[j] / (sd_y * x_sd(j));
    }
    std::vector<double> ycopy(y.data(), y.data() + n);
    const double median_y = median_inplace(ycopy);

    params[row * 3] = beta(0);
    params[row * 3 + 1] = beta(1);
    params[row * 3 + 2] = sigma2;
    double* s = stats.data() + row * k;
    s[0] = beta_hat(0);
    s[1] = beta_hat(1);
    s[2] = rss;
    s[3] = cov[0];
    s[4] = corr[0];
    s[5] = cov[1];
    s[6] = corr[1];
    s[7] = mean_y;
    s[8] = var_y;
    s[9] = median_y;
    for (int j = 0; j < model.noise_dims(); ++j) s[10 + j] = rng.uniform01();
  });

  return ReferenceTable(ZellnerModel::param_names(), model.stat_names(), std::move(params),
                        std::move(stats));
}

namespace {

ZellnerPosterior zellner_posterior_impl(const Eigen::Matrix2d& xtx,
                                        const Eigen::Vector2d& beta_hat, double rss, int n) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(xtx);
  if (!(es.eigenvalues()(0) > 0.0))
    throw NumericError("zellner posterior: singular design matrix");
  const Eigen::Matrix2d xtx_inv = xtx.inverse();
  const double nd = n;
  const double yhy = beta_hat.dot(xtx * beta_hat);
  // Conjugate update:
  //   s2 | y ~ IG(4 + n/2, lambda),  lambda = 3 + rss/2 + y'Hy / (2(n+1))
  //   b | y  ~ T_2(n + 8, n/(n+1) beta_hat, lambda/(4+n/2) * n/(n+1) (X'X)^-1)
  const double lambda = 3.0 + 0.5 * rss + yhy / (2.0 * (nd + 1.0));
  const double shrink = nd / (nd + 1.0);
  const Eigen::Vector2d loc = shrink * beta_hat;
  const Eigen::Matrix2d scale = (lambda / (4.0 + nd / 2.0)) * shrink * xtx_inv;
  const double nu = 8.0 + nd;
  return {BivariateT({loc(0), loc(1)}, {scale(0, 0), scale(0, 1), scale(1, 0), scale(1, 1)},
                     nu),
          InverseGamma(4.0 + nd / 2.0, lambda)};
}

}  // namespace

ZellnerPosterior zellner_exact(std::span<const double> y, std::span<const double> design_rowmajor,
                               int n) {
  if (static_cast<int>(y.size()) != n || static_cast<int>(design_rowmajor.size()) != 2 * n)
    throw DataError("zellner_exact: y/design dimensions do not match n");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> x(
      design_rowmajor.data(), n, 2);
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::Matrix2d xtx = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(xtx);
  if (!(es.eigenvalues()(0) > 0.0)) throw NumericError("zellner_exact: singular design");
  const Eigen::Vector2d beta_hat = xtx.inverse() * (x.transpose() * yv);
  const double rss = (yv - x * beta_hat).squaredNorm();
  return zellner_posterior_impl(xtx, beta_hat, rss, n);
}

ZellnerPosterior zellner_posterior_from_stats(const ZellnerModel& model, double beta1_hat,
                                              double beta2_hat, double rss) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> x(
      model.design().data(), model.n(), 2);
  const Eigen::Matrix2d xtx = x.transpose() * x;
  return zellner_posterior_impl(xtx, Eigen::Vector2d(beta1_hat, beta2_hat), rss, model.n());
}

}  // namespace abcrf
