#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "abcrf/forest.hpp"
#include "abcrf/posterior.hpp"
#include "abcrf/reftable.hpp"

namespace abcrf {

// Acceptance proportion for rejection ABC.
struct ToleranceSpec {
  double p_eps = 0.1;
};

// Per-statistic scaling for the normalized Euclidean distance: MAD over the
// full reference table, falling back to the standard deviation, with
// zero-spread columns dropped from the distance.
struct StatScales {
  std::vector<double> scale;                // 0 marks a dropped column
  std::vector<std::size_t> dropped_stats;
};

StatScales compute_stat_scales(const ReferenceTable& table);

struct AcceptedSample {
  std::vector<std::uint32_t> index;   // training rows, distance nondecreasing
  std::vector<double> distance;
  std::vector<double> kernel_weight;  // Epanechnikov in distance/radius
  double radius = 0.0;
  std::vector<std::size_t> dropped_stats;
};

// Keeps the ceil(p_eps * N) closest records; ties at the radius are all
// included. Pass precomputed scales when evaluating many queries.
AcceptedSample reject(const ReferenceTable& table, std::span<const double> query,
                      ToleranceSpec tol, const StatScales* scales = nullptr);

enum class ParamTransform { none, log_transform, logit };

double apply_transform(ParamTransform t, double v);
double invert_transform(ParamTransform t, double v);

struct AdjustOptions {
  ParamTransform transform = ParamTransform::none;
  bool heteroscedastic = true;
};

struct AdjustResult {
  std::vector<double> values;  // adjusted responses, aligned to accepted order
  bool fell_back_to_rejection = false;
};

// Epanechnikov-weighted local-linear regression adjustment on centered,
// scaled statistics; optional log-squared-residual heteroscedasticity
// correction. A singular weighted design falls back to the raw accepted
// sample.
AdjustResult adjust_local_linear(const AcceptedSample& accepted, const ReferenceTable& table,
                                 std::span<const double> query, const ResponseSpec& response,
                                 const AdjustOptions& options);

// Ridge-penalized variant; lambda picked from the grid by weighted
// generalized cross-validation.
AdjustResult adjust_ridge(const AcceptedSample& accepted, const ReferenceTable& table,
                          std::span<const double> query, const ResponseSpec& response,
                          std::span<const double> lambda_grid, const AdjustOptions& options);

inline std::vector<double> default_ridge_grid() { return {1e-4, 1e-3, 1e-2}; }

// Weighted mean / variance / right-continuous quantiles of a sample.
PosteriorSummary summarize_sample(std::span<const double> values,
                                  std::span<const double> weights,
                                  std::span<const double> alphas);

}  // namespace abcrf
