#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "abcrf/baselines.hpp"
#include "abcrf/forest.hpp"
#include "abcrf/models.hpp"

namespace abcrf {

enum class ModelKind { normal_toy, zellner };
enum class TruthMode { oracle, parameter };
enum class MethodKind { rf, reject, loclinear, ridge };

std::string method_name(MethodKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::normal_toy;
  int n = 10;
  int noise_dims = 50;
};

struct MethodSpec {
  MethodKind kind = MethodKind::rf;
  double tolerance = 0.1;  // ignored for rf
  bool heteroscedastic = true;
  std::vector<double> ridge_lambdas = default_ridge_grid();
};

struct TargetSpec {
  ResponseSpec response;
  // Transform used by the regression-adjusted baselines for this target;
  // the forest always regresses the untransformed response.
  ParamTransform adjust_transform = ParamTransform::none;
};

struct CovarianceTargetSpec {
  std::string a = "beta1";
  std::string b = "beta2";
};

struct ExperimentConfig {
  ModelSpec model;
  std::size_t train_rows = 10000;
  std::size_t test_rows = 100;
  ForestConfig forest;
  std::vector<MethodSpec> methods;
  std::vector<TargetSpec> targets;
  std::vector<CovarianceTargetSpec> covariance_targets;
  std::vector<double> quantiles = {0.025, 0.05, 0.95, 0.975};
  // Subset of {"oob", "cdf", "residual-forest"}; the first is the headline
  // variance estimator.
  std::vector<std::string> variance_methods = {"oob"};
  TruthMode truth = TruthMode::oracle;
  std::size_t added_noise = 0;  // extra U[0,1] columns appended after simulation
  std::uint64_t seed = 0;
  int threads = 0;
};

struct NmaeResult {
  double value = 0.0;
  std::size_t excluded = 0;  // items with |truth| < 1e-12
};

NmaeResult nmae(std::span<const double> estimates, std::span<const double> truths);

struct CoverageResult {
  double coverage_percent = 0.0;
  double mean_length = 0.0;
};

CoverageResult ci_coverage_and_range(std::span<const double> lower,
                                     std::span<const double> upper,
                                     std::span<const double> truths);

struct EvalRow {
  std::string method;
  double tolerance;  // NaN renders as NA
  std::string target;
  std::string metric;
  double value;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  bool has(const std::string& method, const std::string& target,
           const std::string& metric) const;
  double value(const std::string& method, const std::string& target,
               const std::string& metric) const;
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

// Per-item RF estimates, exposed so callers can run their own comparisons
// (e.g. agreement between variance estimators).
struct RfTargetEstimates {
  std::string target;
  std::vector<double> expectation;
  std::map<std::string, std::vector<double>> variance;  // estimator -> items
  std::map<double, std::vector<double>> quantiles;      // alpha -> items
  double oob_mse = 0.0;
};

struct BenchmarkResult {
  EvalReport report;
  std::vector<RfTargetEstimates> rf_estimates;
};

struct SimulatedTables {
  ReferenceTable train;
  ReferenceTable test;
};

// Simulates the train/test pair for a config (independent substreams of the
// same model; added noise columns applied when configured).
SimulatedTables simulate_experiment_tables(const ExperimentConfig& config);

// Simulates train and test tables, fits every requested method, evaluates
// every requested target quantity and emits the long-format report.
BenchmarkResult run_benchmark(const ExperimentConfig& config);

enum class SweepAxis { table_size, tree_count, min_node_size };

SweepAxis parse_sweep_axis(const std::string& name);

struct SweepPoint {
  double axis_value;
  EvalReport report;
};

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              std::span<const double> values);

// Row-name helpers shared with the tests.
std::string target_expectation(const std::string& t);
std::string target_variance(const std::string& t);
std::string target_variance(const std::string& t, const std::string& estimator);
std::string target_quantile(const std::string& t, double alpha);
std::string target_covariance(const std::string& a, const std::string& b);
std::string target_ci(const std::string& t);

}  // namespace abcrf
