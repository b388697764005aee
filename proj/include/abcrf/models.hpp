#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "abcrf/dist.hpp"
#include "abcrf/reftable.hpp"

namespace abcrf {

// Hierarchical Normal mean model:
//   y_i | t1, t2 ~ N(t1, t2),  t1 | t2 ~ N(0, t2),  t2 ~ IG(4, 3).
// Summary statistics: sample mean, unbiased sample variance, MAD (median
// absolute deviation about the median, unscaled), the 3 pairwise sums, the 3
// pairwise products, the triple sum and triple product of those three, then
// noise_dims iid U[0,1] columns drawn fresh per row.
struct NormalToyModel {
  int n = 10;
  int noise_dims = 50;
  std::uint64_t seed = 0;

  NormalToyModel(int n_, int noise_dims_, std::uint64_t seed_);
  int stat_count() const { return 11 + noise_dims; }
  static std::vector<std::string> param_names();
  std::vector<std::string> stat_names() const;
};

struct NormalToyPosterior {
  StudentT theta1;
  InverseGamma theta2;
};

// `substream` separates independent tables drawn from the same model (e.g.
// train vs test); rows are reproducible from (model.seed, substream, row).
ReferenceTable simulate_normal_toy(const NormalToyModel& model, std::size_t count,
                                   int threads = 0, std::uint64_t substream = 0);

// Exact marginal posteriors given an observed n-sample.
NormalToyPosterior normal_toy_exact(std::span<const double> y_sample);

// Same posteriors reconstructed from the summary statistics the simulator
// emits (mean and unbiased variance determine ybar and s2).
NormalToyPosterior normal_toy_posterior_from_stats(int n, double mean, double variance);

// Zellner's hierarchical linear model with a fixed simulated n x 2 design X:
//   y | b, s2 ~ N_n(X b, s2 I),  b | s2 ~ N_2(0, n s2 (X'X)^-1),  s2 ~ IG(4, 3).
// Summary statistics: OLS estimates of b1 and b2, residual sum of squares,
// cov/corr of y with each design column, mean/variance/median of y, then
// noise_dims U[0,1] columns.
class ZellnerModel {
 public:
  ZellnerModel(int n, int noise_dims, std::uint64_t seed);

  int n() const { return n_; }
  int noise_dims() const { return noise_dims_; }
  std::uint64_t seed() const { return seed_; }
  int stat_count() const { return 10 + noise_dims_; }
  // Row-major n x 2 design, frozen at construction.
  const std::vector<double>& design() const { return design_; }
  static std::vector<std::string> param_names();
  std::vector<std::string> stat_names() const;

 private:
  int n_;
  int noise_dims_;
  std::uint64_t seed_;
  std::vector<double> design_;
};

struct ZellnerPosterior {
  BivariateT beta;
  InverseGamma sigma2;
};

ReferenceTable simulate_zellner(const ZellnerModel& model, std::size_t count,
                                int threads = 0, std::uint64_t substream = 0);

ZellnerPosterior zellner_exact(std::span<const double> y, std::span<const double> design_rowmajor,
                               int n);

ZellnerPosterior zellner_posterior_from_stats(const ZellnerModel& model, double beta1_hat,
                                              double beta2_hat, double rss);

}  // namespace abcrf
