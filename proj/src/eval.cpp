#include "abcrf/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>

#include "abcrf/parallel.hpp"
#include "abcrf/posterior.hpp"
#include "abcrf/qrf.hpp"
#include "abcrf/rng.hpp"

namespace abcrf {

namespace {

constexpr double kZeroTruth = 1e-12;

std::string format_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::rf: return "rf";
    case MethodKind::reject: return "reject";
    case MethodKind::loclinear: return "loclinear";
    case MethodKind::ridge: return "ridge";
  }
  return "?";
}

std::string target_expectation(const std::string& t) { return "E(" + t + "|y)"; }
std::string target_variance(const std::string& t) { return "Var(" + t + "|y)"; }
std::string target_variance(const std::string& t, const std::string& estimator) {
  return "Var(" + t + "|y)[" + estimator + "]";
}
std::string target_quantile(const std::string& t, double alpha) {
  return "Q" + format_double(alpha) + "(" + t + "|y)";
}
std::string target_covariance(const std::string& a, const std::string& b) {
  return "Cov(" + a + "," + b + "|y)";
}
std::string target_ci(const std::string& t) { return "CI95(" + t + ")"; }

NmaeResult nmae(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size())
    throw DataError("nmae: estimates/truths length mismatch");
  NmaeResult out;
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (std::fabs(truths[i]) < kZeroTruth) {
      ++out.excluded;
      continue;
    }
    acc += std::fabs(estimates[i] - truths[i]) / std::fabs(truths[i]);
    ++used;
  }
  if (used == 0) throw NumericError("nmae: every item excluded (zero truths)");
  out.value = acc / static_cast<double>(used);
  return out;
}

CoverageResult ci_coverage_and_range(std::span<const double> lower,
                                     std::span<const double> upper,
                                     std::span<const double> truths) {
  if (lower.size() != upper.size() || lower.size() != truths.size())
    throw DataError("ci_coverage_and_range: length mismatch");
  if (lower.empty()) throw DataError("ci_coverage_and_range: empty input");
  std::size_t covered = 0;
  double length = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i])
      throw DataError("crossed credible interval bounds at item " + std::to_string(i));
    if (lower[i] <= truths[i] && truths[i] <= upper[i]) ++covered;
    length += upper[i] - lower[i];
  }
  const auto n = static_cast<double>(lower.size());
  return {100.0 * static_cast<double>(covered) / n, length / n};
}

bool EvalReport::has(const std::string& method, const std::string& target,
                     const std::string& metric) const {
  for (const auto& r : rows)
    if (r.method == method && r.target == target && r.metric == metric) return true;
  return false;
}

double EvalReport::value(const std::string& method, const std::string& target,
                         const std::string& metric) const {
  for (const auto& r : rows)
    if (r.method == method && r.target == target && r.metric == metric) return r.value;
  throw DataError("report row not found: " + method + " / " + target + " / " + metric);
}

void EvalReport::write_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "method,tolerance,target,metric,value\n";
  for (const auto& r : rows) {
    f << r.method << ',';
    if (std::isnan(r.tolerance))
      f << "NA";
    else
      f << format_double(r.tolerance);
    f << ',' << r.target << ',' << r.metric << ',' << format_double(r.value) << '\n';
  }
}

void EvalReport::write_json(const std::string& path) const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row;
    row["method"] = r.method;
    if (std::isnan(r.tolerance))
      row["tolerance"] = nullptr;
    else
      row["tolerance"] = r.tolerance;
    row["target"] = r.target;
    row["metric"] = r.metric;
    row["value"] = r.value;
    rows_json.push_back(std::move(row));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << nlohmann::json{{"rows", std::move(rows_json)}}.dump(2) << '\n';
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "table_size") return SweepAxis::table_size;
  if (name == "tree_count") return SweepAxis::tree_count;
  if (name == "min_node_size") return SweepAxis::min_node_size;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected table_size, tree_count or min_node_size)");
}

namespace {

struct TargetTruths {
  std::vector<double> raw;
  std::vector<double> expectation;
  std::vector<double> variance;
  std::map<double, std::vector<double>> quantiles;
  bool oracle = false;
};

struct ModelHandles {
  std::optional<NormalToyModel> normal;
  std::optional<ZellnerModel> zellner;
};

void validate_sizes(const ExperimentConfig& cfg) {
  if (cfg.train_rows < 2) throw ConfigError("train_rows must be >= 2");
  if (cfg.test_rows < 1) throw ConfigError("test_rows must be >= 1");
}

void validate_config(const ExperimentConfig& cfg) {
  validate_sizes(cfg);
  if (cfg.methods.empty()) throw ConfigError("at least one method is required");
  if (cfg.targets.empty() && cfg.covariance_targets.empty())
    throw ConfigError("at least one target is required");
  if (cfg.variance_methods.empty())
    throw ConfigError("at least one variance method is required");
  for (const auto& vm : cfg.variance_methods)
    if (vm != "oob" && vm != "cdf" && vm != "residual-forest")
      throw ConfigError("unknown variance method '" + vm + "'");
  for (double a : cfg.quantiles)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("quantile orders must lie in (0,1)");
  for (const auto& m : cfg.methods)
    if (m.kind != MethodKind::rf && !(m.tolerance > 0.0 && m.tolerance <= 1.0))
      throw ConfigError("method tolerance must be in (0,1]");
  if (cfg.truth == TruthMode::oracle) {
    for (const auto& t : cfg.targets)
      if (t.response.kind != ResponseSpec::Kind::column)
        throw ConfigError("oracle truth mode supports plain parameter targets only; use "
                          "truth mode 'parameter' for '" + t.response.name() + "'");
    for (const auto& c : cfg.covariance_targets) {
      const bool zellner_pair = cfg.model.kind == ModelKind::zellner &&
                                ((c.a == "beta1" && c.b == "beta2") ||
                                 (c.a == "beta2" && c.b == "beta1"));
      if (!zellner_pair)
        throw ConfigError("oracle covariance truth is only available for (beta1, beta2)");
    }
  }
}

SimulatedTables simulate_tables(const ExperimentConfig& cfg, ModelHandles& models) {
  const std::uint64_t model_seed = derive_seed(cfg.seed, "model");
  std::optional<ReferenceTable> train, test;
  if (cfg.model.kind == ModelKind::normal_toy) {
    models.normal.emplace(cfg.model.n, cfg.model.noise_dims, model_seed);
    train = simulate_normal_toy(*models.normal, cfg.train_rows, cfg.threads, 0);
    test = simulate_normal_toy(*models.normal, cfg.test_rows, cfg.threads, 1);
  } else {
    models.zellner.emplace(cfg.model.n, cfg.model.noise_dims, model_seed);
    train = simulate_zellner(*models.zellner, cfg.train_rows, cfg.threads, 0);
    test = simulate_zellner(*models.zellner, cfg.test_rows, cfg.threads, 1);
  }
  if (cfg.added_noise > 0) {
    train = add_noise_columns(*train, cfg.added_noise, derive_seed(cfg.seed, "train-noise"));
    test = add_noise_columns(*test, cfg.added_noise, derive_seed(cfg.seed, "test-noise"));
  }
  return {std::move(*train), std::move(*test)};
}

TargetTruths compute_truths(const ExperimentConfig& cfg, const ModelHandles& models,
                            const ReferenceTable& test, const TargetSpec& target) {
  TargetTruths out;
  out.raw = target.response.evaluate(test);
  if (cfg.truth != TruthMode::oracle) return out;
  out.oracle = true;
  const std::size_t n_items = test.rows();
  out.expectation.resize(n_items);
  out.variance.resize(n_items);
  for (double a : cfg.quantiles) out.quantiles[a].resize(n_items);

  const std::string& param = target.response.a;
  if (cfg.model.kind == ModelKind::normal_toy) {
    const std::size_t j_mean = test.stat_index("mean");
    const std::size_t j_var = test.stat_index("variance");
    for (std::size_t i = 0; i < n_items; ++i) {
      const auto post = normal_toy_posterior_from_stats(models.normal->n, test.stat(i, j_mean),
                                                        test.stat(i, j_var));
      if (param == "theta1") {
        out.expectation[i] = post.theta1.mean();
        out.variance[i] = post.theta1.variance();
        for (double a : cfg.quantiles) out.quantiles[a][i] = post.theta1.quantile(a);
      } else if (param == "theta2") {
        out.expectation[i] = post.theta2.mean();
        out.variance[i] = post.theta2.variance();
        for (double a : cfg.quantiles) out.quantiles[a][i] = post.theta2.quantile(a);
      } else {
        throw ConfigError("oracle truth unavailable for parameter '" + param + "'");
      }
    }
  } else {
    const std::size_t j_b1 = test.stat_index("beta1_hat");
    const std::size_t j_b2 = test.stat_index("beta2_hat");
    const std::size_t j_rss = test.stat_index("rss");
    for (std::size_t i = 0; i < n_items; ++i) {
      const auto post = zellner_posterior_from_stats(*models.zellner, test.stat(i, j_b1),
                                                     test.stat(i, j_b2), test.stat(i, j_rss));
      if (param == "beta1" || param == "beta2") {
        const StudentT marginal = post.beta.marginal(param == "beta1" ? 0 : 1);
        out.expectation[i] = marginal.mean();
        out.variance[i] = marginal.variance();
        for (double a : cfg.quantiles) out.quantiles[a][i] = marginal.quantile(a);
      } else if (param == "sigma2") {
        out.expectation[i] = post.sigma2.mean();
        out.variance[i] = post.sigma2.variance();
        for (double a : cfg.quantiles) out.quantiles[a][i] = post.sigma2.quantile(a);
      } else {
        throw ConfigError("oracle truth unavailable for parameter '" + param + "'");
      }
    }
  }
  return out;
}

std::vector<double> covariance_truths(const ModelHandles& models, const ReferenceTable& test) {
  const std::size_t j_b1 = test.stat_index("beta1_hat");
  const std::size_t j_b2 = test.stat_index("beta2_hat");
  const std::size_t j_rss = test.stat_index("rss");
  std::vector<double> out(test.rows());
  for (std::size_t i = 0; i < test.rows(); ++i) {
    const auto post = zellner_posterior_from_stats(*models.zellner, test.stat(i, j_b1),
                                                   test.stat(i, j_b2), test.stat(i, j_rss));
    out[i] = post.beta.covariance12();
  }
  return out;
}

class BenchmarkRunner {
 public:
  BenchmarkRunner(const ExperimentConfig& cfg, SimulatedTables tables, ModelHandles models)
      : cfg_(cfg), tables_(std::move(tables)), models_(std::move(models)) {
    scales_ = compute_stat_scales(tables_.train);
    for (const auto& t : cfg_.targets)
      truths_.push_back(compute_truths(cfg_, models_, tables_.test, t));
    if (!cfg_.covariance_targets.empty() && cfg_.truth == TruthMode::oracle)
      cov_truths_ = covariance_truths(models_, tables_.test);
  }

  BenchmarkResult run() {
    BenchmarkResult result;
    for (const auto& method : cfg_.methods) {
      if (method.kind == MethodKind::rf)
        run_rf(result);
      else
        run_baseline(method, result);
    }
    return result;
  }

 private:
  const Forest& rf_forest(const ResponseSpec& response) {
    const std::string key = response.name();
    auto it = rf_cache_.find(key);
    if (it == rf_cache_.end()) {
      ForestConfig fc = cfg_.forest;
      fc.seed = derive_seed(cfg_.seed, "rf:" + key);
      Forest forest = train(tables_.train, response, fc, cfg_.threads);
      OobPredictions oob = oob_predict(forest, tables_.train, cfg_.threads);
      it = rf_cache_.emplace(key, RfContext{std::move(forest), std::move(oob)}).first;
    }
    return it->second.forest;
  }

  void push(BenchmarkResult& result, const std::string& method, double tolerance,
            const std::string& target, const std::string& metric, double value) {
    result.report.rows.push_back({method, tolerance, target, metric, value});
  }

  void push_nmae(BenchmarkResult& result, const std::string& method, double tolerance,
                 const std::string& target, std::span<const double> estimates,
                 std::span<const double> truths) {
    const NmaeResult r = nmae(estimates, truths);
    push(result, method, tolerance, target, "nmae", r.value);
    push(result, method, tolerance, target, "nmae_excluded",
         static_cast<double>(r.excluded));
  }

  void push_ci(BenchmarkResult& result, const std::string& method, double tolerance,
               const std::string& target_name,
               const std::map<double, std::vector<double>>& quantiles,
               std::span<const double> raw_truths) {
    const auto lo = quantiles.find(0.025);
    const auto hi = quantiles.find(0.975);
    if (lo == quantiles.end() || hi == quantiles.end()) return;
    const CoverageResult c = ci_coverage_and_range(lo->second, hi->second, raw_truths);
    push(result, method, tolerance, target_ci(target_name), "coverage", c.coverage_percent);
    push(result, method, tolerance, target_ci(target_name), "mean_length", c.mean_length);
  }

  void run_rf(BenchmarkResult& result) {
    const double na = std::numeric_limits<double>::quiet_NaN();
    const std::size_t n_items = tables_.test.rows();

    for (std::size_t ti = 0; ti < cfg_.targets.size(); ++ti) {
      const TargetSpec& target = cfg_.targets[ti];
      const std::string tname = target.response.name();
      const Forest& forest = rf_forest(target.response);
      const OobPredictions& oob = rf_cache_.at(tname).oob;

      const bool want_residual_forest =
          std::find(cfg_.variance_methods.begin(), cfg_.variance_methods.end(),
                    "residual-forest") != cfg_.variance_methods.end();
      std::optional<Forest> residual_forest;
      if (want_residual_forest) {
        ForestConfig fc = cfg_.forest;
        fc.seed = derive_seed(cfg_.seed, "rf-var2:" + tname);
        residual_forest =
            train_residual_variance_forest(tables_.train, forest, oob, fc, cfg_.threads);
      }

      RfTargetEstimates est;
      est.target = tname;
      est.expectation.resize(n_items);
      for (const auto& vm : cfg_.variance_methods) est.variance[vm].resize(n_items);
      for (double a : cfg_.quantiles) est.quantiles[a].resize(n_items);
      est.oob_mse = oob_mse(forest, oob);

      parallel_for(n_items, cfg_.threads, [&](std::size_t i) {
        const auto query = tables_.test.stat_row(i);
        const WeightVector w = weights(forest, query);
        est.expectation[i] = expectation(w, forest.responses);
        for (const auto& vm : cfg_.variance_methods) {
          double v;
          if (vm == "oob")
            v = variance_oob_weighted(w, forest.responses, oob);
          else if (vm == "cdf")
            v = variance_cdf(w, forest.responses);
          else
            v = predict_mean(*residual_forest, query);
          est.variance[vm][i] = v;
        }
        for (double a : cfg_.quantiles)
          est.quantiles[a][i] = quantile(w, forest.responses, a);
      });

      const TargetTruths& truth = truths_[ti];
      push_nmae(result, "rf", na, target_expectation(tname), est.expectation,
                truth.oracle ? truth.expectation : truth.raw);
      if (truth.oracle) {
        for (std::size_t vi = 0; vi < cfg_.variance_methods.size(); ++vi) {
          const std::string& vm = cfg_.variance_methods[vi];
          push_nmae(result, "rf", na, target_variance(tname, vm), est.variance.at(vm),
                    truth.variance);
          if (vi == 0)
            push_nmae(result, "rf", na, target_variance(tname), est.variance.at(vm),
                      truth.variance);
        }
        for (double a : cfg_.quantiles)
          push_nmae(result, "rf", na, target_quantile(tname, a), est.quantiles.at(a),
                    truth.quantiles.at(a));
      }
      push_ci(result, "rf", na, tname, est.quantiles, truth.raw);
      push(result, "rf", na, tname, "oob_mse", est.oob_mse);
      push(result, "rf", na, tname, "oob_undefined",
           static_cast<double>(oob.undefined_count));

      result.rf_estimates.push_back(std::move(est));
    }

    for (const auto& cov : cfg_.covariance_targets) {
      const Forest& fa = rf_forest(ResponseSpec::column(cov.a));
      const Forest& fb = rf_forest(ResponseSpec::column(cov.b));
      const OobPredictions& oa = rf_cache_.at(cov.a).oob;
      const OobPredictions& ob = rf_cache_.at(cov.b).oob;
      ForestConfig fc = cfg_.forest;
      fc.seed = derive_seed(cfg_.seed, "rf-cov:" + cov.a + "," + cov.b);
      const Forest product = train_covariance_forest(tables_.train, fa.responses, oa,
                                                     fb.responses, ob, fc, cfg_.threads);
      std::vector<double> estimates(n_items);
      parallel_for(n_items, cfg_.threads, [&](std::size_t i) {
        estimates[i] = predict_mean(product, tables_.test.stat_row(i));
      });
      if (cfg_.truth == TruthMode::oracle)
        push_nmae(result, "rf", na, target_covariance(cov.a, cov.b), estimates, cov_truths_);
    }
  }

  void run_baseline(const MethodSpec& method, BenchmarkResult& result) {
    const std::string mname = method_name(method.kind);
    const double tol = method.tolerance;
    const std::size_t n_items = tables_.test.rows();
    const std::size_t n_targets = cfg_.targets.size();

    // Per-target response vectors over the training table.
    std::vector<std::vector<double>> responses(n_targets);
    for (std::size_t ti = 0; ti < n_targets; ++ti)
      responses[ti] = cfg_.targets[ti].response.evaluate(tables_.train);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> cov_responses;
    for (const auto& cov : cfg_.covariance_targets)
      cov_responses.emplace_back(ResponseSpec::column(cov.a).evaluate(tables_.train),
                                 ResponseSpec::column(cov.b).evaluate(tables_.train));

    struct ItemSummaries {
      std::vector<PosteriorSummary> per_target;
      std::vector<double> covariances;
    };
    std::vector<ItemSummaries> items(n_items);

    parallel_for(n_items, cfg_.threads, [&](std::size_t i) {
      const auto query = tables_.test.stat_row(i);
      const AcceptedSample acc =
          reject(tables_.train, query, ToleranceSpec{tol}, &scales_);
      const std::vector<double> uniform(acc.index.size(), 1.0);
      ItemSummaries& out = items[i];
      out.per_target.resize(n_targets);

      auto adjusted_values = [&](const ResponseSpec& response, ParamTransform transform,
                                 std::span<const double> all) -> std::pair<std::vector<double>, const std::vector<double>*> {
        if (method.kind == MethodKind::reject) {
          std::vector<double> vals(acc.index.size());
          for (std::size_t j = 0; j < acc.index.size(); ++j) vals[j] = all[acc.index[j]];
          return {std::move(vals), &uniform};
        }
        AdjustOptions opts;
        opts.transform = transform;
        opts.heteroscedastic = method.heteroscedastic;
        AdjustResult adj =
            method.kind == MethodKind::loclinear
                ? adjust_local_linear(acc, tables_.train, query, response, opts)
                : adjust_ridge(acc, tables_.train, query, response, method.ridge_lambdas,
                               opts);
        return {std::move(adj.values),
                adj.fell_back_to_rejection ? &uniform : &acc.kernel_weight};
      };

      for (std::size_t ti = 0; ti < n_targets; ++ti) {
        auto [vals, wptr] = adjusted_values(cfg_.targets[ti].response,
                                            cfg_.targets[ti].adjust_transform, responses[ti]);
        out.per_target[ti] = summarize_sample(vals, *wptr, cfg_.quantiles);
      }

      for (std::size_t ci = 0; ci < cfg_.covariance_targets.size(); ++ci) {
        const auto& cov = cfg_.covariance_targets[ci];
        auto [va, wa] = adjusted_values(ResponseSpec::column(cov.a), ParamTransform::none,
                                        cov_responses[ci].first);
        auto [vb, wb] = adjusted_values(ResponseSpec::column(cov.b), ParamTransform::none,
                                        cov_responses[ci].second);
        // Paired weighted covariance; both adjustments share the accepted set
        // and kernel weights.
        const std::vector<double>& w = *wa;
        double wsum = 0.0, ma = 0.0, mb = 0.0;
        for (std::size_t j = 0; j < va.size(); ++j) {
          wsum += w[j];
          ma += w[j] * va[j];
          mb += w[j] * vb[j];
        }
        ma /= wsum;
        mb /= wsum;
        double c = 0.0;
        for (std::size_t j = 0; j < va.size(); ++j)
          c += w[j] * (va[j] - ma) * (vb[j] - mb);
        out.covariances.push_back(c / wsum);
        (void)wb;
      }
    });

    for (std::size_t ti = 0; ti < n_targets; ++ti) {
      const std::string tname = cfg_.targets[ti].response.name();
      const TargetTruths& truth = truths_[ti];
      std::vector<double> exp_est(n_items), var_est(n_items);
      std::map<double, std::vector<double>> q_est;
      for (double a : cfg_.quantiles) q_est[a].resize(n_items);
      for (std::size_t i = 0; i < n_items; ++i) {
        exp_est[i] = items[i].per_target[ti].expectation;
        var_est[i] = items[i].per_target[ti].variance;
        for (const auto& [a, v] : items[i].per_target[ti].quantiles) q_est[a][i] = v;
      }
      push_nmae(result, mname, tol, target_expectation(tname), exp_est,
                truth.oracle ? truth.expectation : truth.raw);
      if (truth.oracle) {
        push_nmae(result, mname, tol, target_variance(tname), var_est, truth.variance);
        for (double a : cfg_.quantiles)
          push_nmae(result, mname, tol, target_quantile(tname, a), q_est.at(a),
                    truth.quantiles.at(a));
      }
      push_ci(result, mname, tol, tname, q_est, truth.raw);
    }

    for (std::size_t ci = 0; ci < cfg_.covariance_targets.size(); ++ci) {
      const auto& cov = cfg_.covariance_targets[ci];
      std::vector<double> est(n_items);
      for (std::size_t i = 0; i < n_items; ++i) est[i] = items[i].covariances[ci];
      if (cfg_.truth == TruthMode::oracle)
        push_nmae(result, mname, tol, target_covariance(cov.a, cov.b), est, cov_truths_);
    }
  }

  struct RfContext {
    Forest forest;
    OobPredictions oob;
  };

  const ExperimentConfig& cfg_;
  SimulatedTables tables_;
  ModelHandles models_;
  StatScales scales_;
  std::vector<TargetTruths> truths_;
  std::vector<double> cov_truths_;
  std::map<std::string, RfContext> rf_cache_;
};

}  // namespace

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  validate_config(config);
  ModelHandles models;
  SimulatedTables tables = simulate_tables(config, models);
  BenchmarkRunner runner(config, std::move(tables), std::move(models));
  return runner.run();
}

SimulatedTables simulate_experiment_tables(const ExperimentConfig& config) {
  validate_sizes(config);
  ModelHandles models;
  return simulate_tables(config, models);
}

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              std::span<const double> values) {
  if (values.empty()) throw ConfigError("sweep requires at least one axis value");
  std::vector<SweepPoint> out;
  for (double v : values) {
    if (!(v >= 1.0)) throw ConfigError("sweep axis values must be >= 1");
    ExperimentConfig point = config;
    switch (axis) {
      case SweepAxis::table_size:
        point.train_rows = static_cast<std::size_t>(v);
        break;
      case SweepAxis::tree_count:
        point.forest.tree_count = static_cast<int>(v);
        break;
      case SweepAxis::min_node_size:
        point.forest.min_node_size = static_cast<int>(v);
        break;
    }
    out.push_back({v, run_benchmark(point).report});
  }
  return out;
}

}  // namespace abcrf
