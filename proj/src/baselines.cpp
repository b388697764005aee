#include "abcrf/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "abcrf/qrf.hpp"

namespace abcrf {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Residuals below this squared magnitude are clamped before the log in the
// heteroscedastic fit.
constexpr double kMinSqResidual = 1e-300;

struct Regression {
  Eigen::VectorXd coef;      // intercept first
  Eigen::VectorXd fitted;    // at every accepted record
  bool singular = false;
};

// Weighted least squares of y on [1, Z]; detects rank deficiency.
Regression solve_wls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& sqrt_w) {
  Regression out;
  const Eigen::MatrixXd xw = sqrt_w.asDiagonal() * design;
  const Eigen::VectorXd yw = sqrt_w.cwiseProduct(y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    out.singular = true;
    return out;
  }
  out.coef = qr.solve(yw);
  out.fitted = design * out.coef;
  return out;
}

}  // namespace

double apply_transform(ParamTransform t, double v) {
  switch (t) {
    case ParamTransform::none:
      return v;
    case ParamTransform::log_transform:
      if (!(v > 0.0)) throw NumericError("log transform requires positive values");
      return std::log(v);
    case ParamTransform::logit:
      if (!(v > 0.0 && v < 1.0)) throw NumericError("logit transform requires values in (0,1)");
      return std::log(v / (1.0 - v));
  }
  return v;
}

double invert_transform(ParamTransform t, double v) {
  switch (t) {
    case ParamTransform::none:
      return v;
    case ParamTransform::log_transform:
      return std::exp(v);
    case ParamTransform::logit:
      return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

StatScales compute_stat_scales(const ReferenceTable& table) {
  StatScales out;
  out.scale.resize(table.stat_count());
  for (std::size_t j = 0; j < table.stat_count(); ++j) {
    std::vector<double> col = table.stat_column(j);
    const double med = median_of(col);
    std::vector<double> dev(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) dev[i] = std::fabs(col[i] - med);
    double scale = median_of(std::move(dev));
    if (scale == 0.0) {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(col.size());
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      scale = col.size() > 1 ? std::sqrt(ss / static_cast<double>(col.size() - 1)) : 0.0;
    }
    if (scale == 0.0) out.dropped_stats.push_back(j);
    out.scale[j] = scale;
  }
  if (out.dropped_stats.size() == table.stat_count())
    throw DataError("every statistic column has zero spread");
  return out;
}

AcceptedSample reject(const ReferenceTable& table, std::span<const double> query,
                      ToleranceSpec tol, const StatScales* scales) {
  if (query.size() != table.stat_count())
    throw DataError("query dimension does not match table statistics");
  if (!(tol.p_eps > 0.0 && tol.p_eps <= 1.0))
    throw ConfigError("tolerance proportion must be in (0, 1]");
  const std::size_t n = table.rows();
  const auto m = static_cast<std::size_t>(std::ceil(tol.p_eps * static_cast<double>(n)));
  if (m < 2) throw ConfigError("tolerance accepts fewer than 2 records");

  StatScales local;
  if (!scales) {
    local = compute_stat_scales(table);
    scales = &local;
  }

  std::vector<double> dist(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = table.stat_row(t);
    double d2 = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (scales->scale[j] == 0.0) continue;
      const double d = (query[j] - row[j]) / scales->scale[j];
      d2 += d * d;
    }
    dist[t] = std::sqrt(d2);
  }

  std::vector<double> sorted(dist);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m - 1),
                   sorted.end());
  const double radius = sorted[m - 1];

  AcceptedSample out;
  out.radius = radius;
  out.dropped_stats = scales->dropped_stats;
  for (std::uint32_t t = 0; t < n; ++t)
    if (dist[t] <= radius) out.index.push_back(t);
  std::stable_sort(out.index.begin(), out.index.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return dist[a] < dist[b]; });
  out.distance.resize(out.index.size());
  out.kernel_weight.resize(out.index.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.index.size(); ++i) {
    const double d = dist[out.index[i]];
    out.distance[i] = d;
    const double u = radius > 0.0 ? d / radius : 0.0;
    out.kernel_weight[i] = 1.0 - u * u;
    total += out.kernel_weight[i];
  }
  if (!(total > 0.0))
    std::fill(out.kernel_weight.begin(), out.kernel_weight.end(), 1.0);
  return out;
}

namespace {

struct AdjustInputs {
  Eigen::MatrixXd design;  // [1 | centered scaled stats], accepted rows
  Eigen::VectorXd y;       // transformed responses
  Eigen::VectorXd sqrt_w;
  std::vector<double> raw;  // untransformed responses (fallback payload)
  StatScales scales;
};

AdjustInputs build_inputs(const AcceptedSample& accepted, const ReferenceTable& table,
                          std::span<const double> query, const ResponseSpec& response,
                          const AdjustOptions& options) {
  const std::size_t m = accepted.index.size();
  AdjustInputs in;
  in.scales = compute_stat_scales(table);
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < table.stat_count(); ++j)
    if (in.scales.scale[j] != 0.0) kept.push_back(j);
  if (m <= kept.size() + 1)
    throw ConfigError("accepted sample too small for regression adjustment (" +
                      std::to_string(m) + " records, " + std::to_string(kept.size()) +
                      " statistics)");

  const std::vector<double> all_responses = response.evaluate(table);
  in.design.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(kept.size() + 1));
  in.y.resize(static_cast<Eigen::Index>(m));
  in.sqrt_w.resize(static_cast<Eigen::Index>(m));
  in.raw.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t t = accepted.index[i];
    in.design(static_cast<Eigen::Index>(i), 0) = 1.0;
    const auto row = table.stat_row(t);
    for (std::size_t c = 0; c < kept.size(); ++c) {
      const std::size_t j = kept[c];
      in.design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1)) =
          (row[j] - query[j]) / in.scales.scale[j];
    }
    in.raw[i] = all_responses[t];
    in.y(static_cast<Eigen::Index>(i)) = apply_transform(options.transform, in.raw[i]);
    in.sqrt_w(static_cast<Eigen::Index>(i)) = std::sqrt(accepted.kernel_weight[i]);
  }
  return in;
}

std::vector<double> finish_adjustment(const Eigen::VectorXd& residuals, double intercept,
                                      const Eigen::VectorXd& scale_ratio,
                                      ParamTransform transform) {
  std::vector<double> out(static_cast<std::size_t>(residuals.size()));
  for (Eigen::Index i = 0; i < residuals.size(); ++i)
    out[static_cast<std::size_t>(i)] =
        invert_transform(transform, intercept + residuals(i) * scale_ratio(i));
  return out;
}

// Log-squared-residual heteroscedasticity fit; returns exp((l0 - l_t)/2).
// Residuals that are pure rounding noise carry no scale information, so the
// correction is skipped when the residual rms is negligible, and isolated
// exact zeros are floored relative to the rms to keep the fit sane.
Eigen::VectorXd hetero_ratio(const Eigen::MatrixXd& design, const Eigen::VectorXd& residuals,
                             const Eigen::VectorXd& sqrt_w, bool ridge, double lambda,
                             double response_scale) {
  const double rms =
      std::sqrt(residuals.squaredNorm() / static_cast<double>(residuals.size()));
  if (rms <= 1e-10 * std::max(1.0, response_scale))
    return Eigen::VectorXd::Ones(residuals.size());
  const double floor_sq = std::max(rms * rms * 1e-16, kMinSqResidual);
  Eigen::VectorXd logs(residuals.size());
  for (Eigen::Index i = 0; i < residuals.size(); ++i)
    logs(i) = std::log(std::max(residuals(i) * residuals(i), floor_sq));
  Eigen::VectorXd fitted, coef0;
  if (!ridge) {
    Regression reg = solve_wls(design, logs, sqrt_w);
    if (reg.singular) return Eigen::VectorXd::Ones(residuals.size());
    fitted = reg.fitted;
    coef0 = reg.coef.head(1);
  } else {
    // Ridge with the caller's lambda on the centered design (column 0 is the
    // intercept and stays unpenalized through centering).
    const Eigen::Index m = design.rows();
    const Eigen::MatrixXd z = design.rightCols(design.cols() - 1);
    const double wsum = sqrt_w.squaredNorm();
    const Eigen::VectorXd w2 = sqrt_w.cwiseProduct(sqrt_w);
    const Eigen::RowVectorXd zbar = (w2.transpose() * z) / wsum;
    const double lbar = w2.dot(logs) / wsum;
    const Eigen::MatrixXd zc = sqrt_w.asDiagonal() * (z.rowwise() - zbar);
    const Eigen::VectorXd lc = sqrt_w.cwiseProduct((logs.array() - lbar).matrix());
    const Eigen::MatrixXd gram =
        zc.transpose() * zc + lambda * Eigen::MatrixXd::Identity(z.cols(), z.cols());
    const Eigen::VectorXd beta = gram.ldlt().solve(zc.transpose() * lc);
    const double b0 = lbar - zbar.dot(beta);
    fitted = (z * beta).array() + b0;
    coef0 = Eigen::VectorXd::Constant(1, b0);
    (void)m;
  }
  Eigen::VectorXd ratio(residuals.size());
  for (Eigen::Index i = 0; i < residuals.size(); ++i)
    ratio(i) = std::exp(0.5 * (coef0(0) - fitted(i)));
  return ratio;
}

}  // namespace

AdjustResult adjust_local_linear(const AcceptedSample& accepted, const ReferenceTable& table,
                                 std::span<const double> query, const ResponseSpec& response,
                                 const AdjustOptions& options) {
  AdjustInputs in = build_inputs(accepted, table, query, response, options);
  AdjustResult out;
  Regression reg = solve_wls(in.design, in.y, in.sqrt_w);
  if (reg.singular) {
    out.values = in.raw;
    out.fell_back_to_rejection = true;
    return out;
  }
  const Eigen::VectorXd residuals = in.y - reg.fitted;
  Eigen::VectorXd ratio = Eigen::VectorXd::Ones(residuals.size());
  if (options.heteroscedastic)
    ratio = hetero_ratio(in.design, residuals, in.sqrt_w, false, 0.0,
                         std::fabs(reg.coef(0)));
  out.values = finish_adjustment(residuals, reg.coef(0), ratio, options.transform);
  return out;
}

AdjustResult adjust_ridge(const AcceptedSample& accepted, const ReferenceTable& table,
                          std::span<const double> query, const ResponseSpec& response,
                          std::span<const double> lambda_grid, const AdjustOptions& options) {
  if (lambda_grid.empty()) throw ConfigError("ridge adjustment requires a lambda grid");
  for (double l : lambda_grid)
    if (!(l > 0.0)) throw ConfigError("ridge lambda values must be positive");

  AdjustInputs in = build_inputs(accepted, table, query, response, options);
  const Eigen::Index m = in.design.rows();
  const Eigen::MatrixXd z = in.design.rightCols(in.design.cols() - 1);

  // Weighted centering absorbs the (unpenalized) intercept.
  const Eigen::VectorXd w2 = in.sqrt_w.cwiseProduct(in.sqrt_w);
  const double wsum = w2.sum();
  if (!(wsum > 0.0)) throw NumericError("ridge adjustment: zero total kernel weight");
  const Eigen::RowVectorXd zbar = (w2.transpose() * z) / wsum;
  const double ybar = w2.dot(in.y) / wsum;
  const Eigen::MatrixXd zc = in.sqrt_w.asDiagonal() * (z.rowwise() - zbar);
  const Eigen::VectorXd yc = in.sqrt_w.cwiseProduct((in.y.array() - ybar).matrix());

  Eigen::BDCSVD<Eigen::MatrixXd> svd(zc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& d = svd.singularValues();
  const Eigen::VectorXd uty = svd.matrixU().transpose() * yc;

  std::size_t n_eff = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (w2(i) > 0.0) ++n_eff;

  double best_gcv = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_grid[0];
  for (double lambda : lambda_grid) {
    double rss = yc.squaredNorm();
    double df = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double shrink = d(i) * d(i) / (d(i) * d(i) + lambda);
      rss += (shrink * shrink - 2.0 * shrink) * uty(i) * uty(i);
      df += shrink;
    }
    const double denom = 1.0 - (df + 1.0) / static_cast<double>(n_eff);
    const double gcv = denom > 0.0 ? (rss / static_cast<double>(n_eff)) / (denom * denom)
                                   : std::numeric_limits<double>::infinity();
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_lambda = lambda;
    }
  }

  Eigen::VectorXd shrunk(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    shrunk(i) = d(i) / (d(i) * d(i) + best_lambda) * uty(i);
  const Eigen::VectorXd beta = svd.matrixV() * shrunk;
  const double b0 = ybar - zbar.dot(beta);

  const Eigen::VectorXd fitted = (z * beta).array() + b0;
  const Eigen::VectorXd residuals = in.y - fitted;
  Eigen::VectorXd ratio = Eigen::VectorXd::Ones(residuals.size());
  if (options.heteroscedastic)
    ratio = hetero_ratio(in.design, residuals, in.sqrt_w, true, best_lambda, std::fabs(b0));

  AdjustResult out;
  out.values = finish_adjustment(residuals, b0, ratio, options.transform);
  return out;
}

PosteriorSummary summarize_sample(std::span<const double> values,
                                  std::span<const double> weights,
                                  std::span<const double> alphas) {
  if (values.empty()) throw DataError("summarize_sample: empty sample");
  if (values.size() != weights.size())
    throw DataError("summarize_sample: values/weights length mismatch");
  double wsum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] < 0.0) throw DataError("summarize_sample: negative weight");
    wsum += weights[i];
    mean += weights[i] * values[i];
  }
  if (!(wsum > 0.0)) throw DataError("summarize_sample: zero total weight");
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    var += weights[i] * (values[i] - mean) * (values[i] - mean);
  var /= wsum;

  PosteriorSummary out;
  out.expectation = mean;
  out.variance = var;
  for (double a : alphas) out.quantiles.emplace_back(a, weighted_quantile(values, weights, a));
  return out;
}

}  // namespace abcrf
