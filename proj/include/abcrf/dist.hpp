#pragma once

#include <array>
#include <cstddef>

namespace abcrf {

// Regularized incomplete gamma functions, P + Q = 1.
double reg_gamma_lower(double a, double x);
double reg_gamma_upper(double a, double x);

// Regularized incomplete beta I_x(a, b).
double reg_beta(double a, double b, double x);

// Inverse of reg_gamma_lower in x for fixed shape, by bracketed root-finding
// to 1e-10.
double gamma_quantile(double p, double shape);

// Standard Student-t cdf/quantile (location 0, scale 1). Quantiles for
// alpha < 1/2 are reflected from the upper half, so q(alpha) == -q(1-alpha)
// holds exactly.
double student_t_cdf(double t, double nu);
double student_t_quantile(double alpha, double nu);

// General t with squared-scale parameter: X = loc + sqrt(scale2) * T_nu,
// so Var(X) = scale2 * nu / (nu - 2).
class StudentT {
 public:
  StudentT(double nu, double loc, double scale2);
  double nu() const { return nu_; }
  double location() const { return loc_; }
  double scale2() const { return scale2_; }
  double mean() const;      // requires nu > 1
  double variance() const;  // requires nu > 2
  double cdf(double x) const;
  double quantile(double alpha) const;

 private:
  double nu_, loc_, scale2_;
};

// Inverse gamma with shape kappa and scale lambda:
// pdf(x) = lambda^kappa / Gamma(kappa) * x^(-kappa-1) * exp(-lambda/x).
class InverseGamma {
 public:
  InverseGamma(double kappa, double lambda);
  double shape() const { return kappa_; }
  double scale() const { return lambda_; }
  double mean() const;      // requires kappa > 1
  double variance() const;  // requires kappa > 2
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double alpha) const;

 private:
  double kappa_, lambda_;
};

// Bivariate t with location, 2x2 scale matrix (row-major) and dof nu;
// Cov = scale * nu / (nu - 2). Marginals are general t with the same nu.
class BivariateT {
 public:
  BivariateT(std::array<double, 2> loc, std::array<double, 4> scale, double nu);
  double nu() const { return nu_; }
  const std::array<double, 2>& location() const { return loc_; }
  const std::array<double, 4>& scale() const { return scale_; }
  std::array<double, 2> mean() const;
  std::array<double, 4> covariance() const;
  double covariance12() const;
  StudentT marginal(std::size_t i) const;

 private:
  std::array<double, 2> loc_;
  std::array<double, 4> scale_;
  double nu_;
};

}  // namespace abcrf
