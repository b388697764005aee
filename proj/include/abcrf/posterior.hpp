#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abcrf/forest.hpp"
#include "abcrf/qrf.hpp"

namespace abcrf {

// Posterior summary for one scalar response, shared by the RF path and the
// classical ABC baselines.
struct PosteriorSummary {
  double expectation = 0.0;
  double variance = 0.0;
  std::vector<std::pair<double, double>> quantiles;  // (alpha, value)
};

// Out-of-bag predictions for the training records: for record t, the mean
// leaf prediction over the trees whose bootstrap sample excludes t. A record
// in-bag everywhere is flagged undefined (vanishingly rare at B >= 500).
struct OobPredictions {
  std::vector<double> values;
  std::vector<std::uint8_t> defined;
  std::size_t undefined_count = 0;
};

OobPredictions oob_predict(const Forest& forest, const ReferenceTable& table, int threads = 0);

// Mean squared error of the OOB predictions against the forest's responses.
double oob_mse(const Forest& forest, const OobPredictions& oob);

// Variance estimators. Method names follow the CLI flags:
//   oob             — query weights applied to squared OOB residuals (default)
//   residual-forest — second forest trained on squared OOB residuals
//   cdf             — variance of the weighted empirical distribution

double variance_cdf(const WeightVector& w, std::span<const double> responses);

// Undefined OOB entries are excluded and the remaining weights renormalized;
// the excluded mass is reported through excluded_mass when non-null.
double variance_oob_weighted(const WeightVector& w, std::span<const double> responses,
                             const OobPredictions& oob, double* excluded_mass = nullptr);

// Trains the squared-residual forest; rows with undefined OOB predictions are
// dropped from its training set.
Forest train_residual_variance_forest(const ReferenceTable& table, const Forest& marginal,
                                      const OobPredictions& oob, ForestConfig config,
                                      int threads = 0);

double variance_residual_forest(const ReferenceTable& table, const Forest& marginal,
                                const OobPredictions& oob, std::span<const double> query,
                                ForestConfig config, int threads = 0);

// Covariance of two parameter transforms: a third forest trained on the
// products of their OOB residuals; its prediction at the query estimates
// Cov(tau, sigma | query).
Forest train_covariance_forest(const ReferenceTable& table, std::span<const double> tau,
                               const OobPredictions& tau_oob, std::span<const double> sigma,
                               const OobPredictions& sigma_oob, ForestConfig config,
                               int threads = 0);

// One-shot version: trains the two marginal forests (seeds derived from
// config.seed) and the product forest, then predicts at the query.
double covariance(const ReferenceTable& table, std::span<const double> query,
                  const ResponseSpec& tau, const ResponseSpec& sigma, ForestConfig config,
                  int threads = 0);

struct ImportanceEntry {
  std::string statistic;
  double importance;
};

// Total training-time RSS decrease attributed to each statistic, divided by
// the tree count; sorted descending.
std::vector<ImportanceEntry> variable_importance(const Forest& forest);

void write_importance_csv(const std::vector<ImportanceEntry>& report, const std::string& path);

// OOB mean squared error using only the first b trees, for each checkpoint b
// (strictly ascending, each in [1, B]).
std::vector<std::pair<int, double>> oob_mse_curve(const Forest& forest,
                                                  const ReferenceTable& table,
                                                  std::span<const int> checkpoints,
                                                  int threads = 0);

void write_oob_curve_csv(const std::vector<std::pair<int, double>>& curve,
                         const std::string& path);

}  // namespace abcrf
