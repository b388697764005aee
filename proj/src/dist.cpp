#include "abcrf/dist.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "abcrf/errors.hpp"

namespace abcrf {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Lower incomplete gamma by series expansion; valid for x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by Lentz continued fraction; valid for x >= a + 1.
double gamma_cont_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta (Lentz).
double beta_cont_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

void require(bool cond, const char* msg) {
  if (!cond) throw NumericError(msg);
}

}  // namespace

double reg_gamma_lower(double a, double x) {
  require(a > 0.0, "reg_gamma_lower requires shape > 0");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cont_fraction(a, x);
}

double reg_gamma_upper(double a, double x) {
  require(a > 0.0, "reg_gamma_upper requires shape > 0");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cont_fraction(a, x);
}

double reg_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "reg_beta requires positive shapes");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * beta_cont_fraction(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * beta_cont_fraction(b, a, 1.0 - x) / b;
}

double gamma_quantile(double p, double shape) {
  require(shape > 0.0, "gamma_quantile requires shape > 0");
  require(p > 0.0 && p < 1.0, "gamma_quantile requires p in (0,1)");
  double lo = 0.0;
  double hi = shape;
  while (reg_gamma_lower(shape, hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("gamma_quantile bracket expansion failed");
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (reg_gamma_lower(shape, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-10 * std::max(1.0, std::fabs(hi)) && hi - lo <= 1e-10 + 1e-14 * hi)
      break;
  }
  return 0.5 * (lo + hi);
}

double student_t_cdf(double t, double nu) {
  require(nu > 0.0, "student_t_cdf requires nu > 0");
  if (t == 0.0) return 0.5;
  const double x = nu / (nu + t * t);
  const double half_tail = 0.5 * reg_beta(0.5 * nu, 0.5, x);
  return t > 0.0 ? 1.0 - half_tail : half_tail;
}

double student_t_quantile(double alpha, double nu) {
  require(alpha > 0.0 && alpha < 1.0, "student_t_quantile requires alpha in (0,1)");
  if (alpha < 0.5) return -student_t_quantile(1.0 - alpha, nu);
  if (alpha == 0.5) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, nu) < alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("student_t_quantile bracket expansion failed");
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, nu) < alpha)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

StudentT::StudentT(double nu, double loc, double scale2) : nu_(nu), loc_(loc), scale2_(scale2) {
  require(nu > 0.0, "StudentT requires nu > 0");
  require(scale2 > 0.0, "StudentT requires scale2 > 0");
}

double StudentT::mean() const {
  require(nu_ > 1.0, "StudentT mean requires nu > 1");
  return loc_;
}

double StudentT::variance() const {
  require(nu_ > 2.0, "StudentT variance requires nu > 2");
  return scale2_ * nu_ / (nu_ - 2.0);
}

double StudentT::cdf(double x) const {
  return student_t_cdf((x - loc_) / std::sqrt(scale2_), nu_);
}

double StudentT::quantile(double alpha) const {
  return loc_ + std::sqrt(scale2_) * student_t_quantile(alpha, nu_);
}

InverseGamma::InverseGamma(double kappa, double lambda) : kappa_(kappa), lambda_(lambda) {
  require(kappa > 0.0, "InverseGamma requires shape > 0");
  require(lambda > 0.0, "InverseGamma requires scale > 0");
}

double InverseGamma::mean() const {
  require(kappa_ > 1.0, "InverseGamma mean requires shape > 1");
  return lambda_ / (kappa_ - 1.0);
}

double InverseGamma::variance() const {
  require(kappa_ > 2.0, "InverseGamma variance requires shape > 2");
  const double m = lambda_ / (kappa_ - 1.0);
  return m * m / (kappa_ - 2.0);
}

double InverseGamma::pdf(double x) const {
  if (x <= 0.0) return 0.0;
  return std::exp(kappa_ * std::log(lambda_) - std::lgamma(kappa_) -
                  (kappa_ + 1.0) * std::log(x) - lambda_ / x);
}

double InverseGamma::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  return reg_gamma_upper(kappa_, lambda_ / x);
}

double InverseGamma::quantile(double alpha) const {
  require(alpha > 0.0 && alpha < 1.0, "InverseGamma quantile requires alpha in (0,1)");
  // X = lambda / G with G ~ Gamma(kappa, 1): P(X <= x) = P(G >= lambda/x).
  return lambda_ / gamma_quantile(1.0 - alpha, kappa_);
}

BivariateT::BivariateT(std::array<double, 2> loc, std::array<double, 4> scale, double nu)
    : loc_(loc), scale_(scale), nu_(nu) {
  require(nu > 0.0, "BivariateT requires nu > 0");
  require(scale[0] > 0.0 && scale[3] > 0.0, "BivariateT requires positive diagonal scale");
  require(scale[1] == scale[2], "BivariateT scale matrix must be symmetric");
  require(scale[0] * scale[3] - scale[1] * scale[2] > 0.0,
          "BivariateT scale matrix must be positive definite");
}

std::array<double, 2> BivariateT::mean() const {
  require(nu_ > 1.0, "BivariateT mean requires nu > 1");
  return loc_;
}

std::array<double, 4> BivariateT::covariance() const {
  require(nu_ > 2.0, "BivariateT covariance requires nu > 2");
  const double f = nu_ / (nu_ - 2.0);
  return {scale_[0] * f, scale_[1] * f, scale_[2] * f, scale_[3] * f};
}

double BivariateT::covariance12() const { return covariance()[1]; }

StudentT BivariateT::marginal(std::size_t i) const {
  require(i < 2, "BivariateT marginal index out of range");
  return StudentT(nu_, loc_[i], scale_[i * 3]);
}

}  // namespace abcrf
