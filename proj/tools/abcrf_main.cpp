// abcrf command-line front end: simulate reference tables, train forests,
// predict posterior summaries, run benchmark evaluations and sweeps.

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "abcrf/baselines.hpp"
#include "abcrf/eval.hpp"
#include "abcrf/forest.hpp"
#include "abcrf/models.hpp"
#include "abcrf/posterior.hpp"
#include "abcrf/qrf.hpp"
#include "abcrf/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace abcrf;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

ParamTransform parse_transform(const std::string& name) {
  if (name == "none") return ParamTransform::none;
  if (name == "log") return ParamTransform::log_transform;
  if (name == "logit") return ParamTransform::logit;
  throw ConfigError("unknown transform '" + name + "' (expected none, log or logit)");
}

std::string transform_name(ParamTransform t) {
  switch (t) {
    case ParamTransform::none: return "none";
    case ParamTransform::log_transform: return "log";
    case ParamTransform::logit: return "logit";
  }
  return "none";
}

struct RunConfig {
  ExperimentConfig experiment;
  std::string output_dir = "out";
};

RunConfig parse_config(const json& j) {
  RunConfig rc;
  ExperimentConfig& cfg = rc.experiment;
  check_keys(j, "config",
             {"model", "sizes", "forest", "methods", "targets", "covariance_targets",
              "quantiles", "variance_methods", "truth", "added_noise", "seed", "threads",
              "output_dir"});

  const json& model = j.at("model");
  check_keys(model, "model", {"kind", "n", "noise_dims"});
  const std::string kind = model.at("kind").get<std::string>();
  if (kind == "normal_toy")
    cfg.model.kind = ModelKind::normal_toy;
  else if (kind == "zellner")
    cfg.model.kind = ModelKind::zellner;
  else
    throw ConfigError("unknown model kind '" + kind + "'");
  cfg.model.n = model.value("n", cfg.model.kind == ModelKind::zellner ? 100 : 10);
  cfg.model.noise_dims = model.value("noise_dims", 50);

  if (j.contains("sizes")) {
    const json& sizes = j.at("sizes");
    check_keys(sizes, "sizes", {"train", "test"});
    cfg.train_rows = sizes.value("train", cfg.train_rows);
    cfg.test_rows = sizes.value("test", cfg.test_rows);
  }
  if (j.contains("forest")) {
    const json& forest = j.at("forest");
    check_keys(forest, "forest", {"trees", "mtry", "min_node_size"});
    cfg.forest.tree_count = forest.value("trees", cfg.forest.tree_count);
    cfg.forest.mtry = forest.value("mtry", cfg.forest.mtry);
    cfg.forest.min_node_size = forest.value("min_node_size", cfg.forest.min_node_size);
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const json& m : j.at("methods")) {
      check_keys(m, "methods[]", {"name", "tolerance", "heteroscedastic", "lambdas"});
      MethodSpec spec;
      const std::string name = m.at("name").get<std::string>();
      if (name == "rf")
        spec.kind = MethodKind::rf;
      else if (name == "reject")
        spec.kind = MethodKind::reject;
      else if (name == "loclinear")
        spec.kind = MethodKind::loclinear;
      else if (name == "ridge")
        spec.kind = MethodKind::ridge;
      else
        throw ConfigError("unknown method '" + name + "'");
      spec.tolerance = m.value("tolerance", spec.tolerance);
      spec.heteroscedastic = m.value("heteroscedastic", true);
      if (m.contains("lambdas")) spec.ridge_lambdas = m.at("lambdas").get<std::vector<double>>();
      cfg.methods.push_back(std::move(spec));
    }
  }
  if (j.contains("targets")) {
    cfg.targets.clear();
    for (const json& t : j.at("targets")) {
      check_keys(t, "targets[]", {"parameter", "transform"});
      TargetSpec spec;
      spec.response = ResponseSpec::parse(t.at("parameter").get<std::string>());
      spec.adjust_transform = parse_transform(t.value("transform", "none"));
      cfg.targets.push_back(std::move(spec));
    }
  }
  if (j.contains("covariance_targets")) {
    cfg.covariance_targets.clear();
    for (const json& c : j.at("covariance_targets")) {
      check_keys(c, "covariance_targets[]", {"a", "b"});
      cfg.covariance_targets.push_back({c.at("a").get<std::string>(),
                                        c.at("b").get<std::string>()});
    }
  }
  if (j.contains("quantiles")) cfg.quantiles = j.at("quantiles").get<std::vector<double>>();
  if (j.contains("variance_methods"))
    cfg.variance_methods = j.at("variance_methods").get<std::vector<std::string>>();
  if (j.contains("truth")) {
    const std::string mode = j.at("truth").get<std::string>();
    if (mode == "oracle")
      cfg.truth = TruthMode::oracle;
    else if (mode == "parameter")
      cfg.truth = TruthMode::parameter;
    else
      throw ConfigError("unknown truth mode '" + mode + "'");
  }
  cfg.added_noise = j.value("added_noise", 0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.threads = j.value("threads", 0);
  rc.output_dir = j.value("output_dir", rc.output_dir);
  return rc;
}

json resolved_config_json(const RunConfig& rc) {
  const ExperimentConfig& cfg = rc.experiment;
  json j;
  j["model"] = {{"kind", cfg.model.kind == ModelKind::zellner ? "zellner" : "normal_toy"},
                {"n", cfg.model.n},
                {"noise_dims", cfg.model.noise_dims}};
  j["sizes"] = {{"train", cfg.train_rows}, {"test", cfg.test_rows}};
  j["forest"] = {{"trees", cfg.forest.tree_count},
                 {"mtry", cfg.forest.mtry},
                 {"min_node_size", cfg.forest.min_node_size}};
  json methods = json::array();
  for (const auto& m : cfg.methods) {
    json mj;
    mj["name"] = method_name(m.kind);
    if (m.kind != MethodKind::rf) {
      mj["tolerance"] = m.tolerance;
      mj["heteroscedastic"] = m.heteroscedastic;
    }
    if (m.kind == MethodKind::ridge) mj["lambdas"] = m.ridge_lambdas;
    methods.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods);
  json targets = json::array();
  for (const auto& t : cfg.targets)
    targets.push_back({{"parameter", t.response.name()},
                       {"transform", transform_name(t.adjust_transform)}});
  j["targets"] = std::move(targets);
  json covs = json::array();
  for (const auto& c : cfg.covariance_targets) covs.push_back({{"a", c.a}, {"b", c.b}});
  j["covariance_targets"] = std::move(covs);
  j["quantiles"] = cfg.quantiles;
  j["variance_methods"] = cfg.variance_methods;
  j["truth"] = cfg.truth == TruthMode::oracle ? "oracle" : "parameter";
  j["added_noise"] = cfg.added_noise;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["output_dir"] = rc.output_dir;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void write_resolved_config(const RunConfig& rc, const fs::path& dir) {
  std::ofstream f(dir / "config.resolved.json", std::ios::binary);
  if (!f) throw DataError("cannot write resolved config");
  f << resolved_config_json(rc).dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
}

int threads_from_env(int flag_value) {
  if (flag_value != 0) return flag_value;
  if (const char* env = std::getenv("ABCF_THREADS")) {
    int v = 0;
    auto [p, ec] = std::from_chars(env, env + std::string_view(env).size(), v);
    if (ec == std::errc() && v > 0) return v;
  }
  return 0;
}

std::string fmt(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// --- subcommand bodies -----------------------------------------------------

int cmd_simulate(const RunConfig& rc) {
  const fs::path dir(rc.output_dir);
  ensure_dir(dir);
  SimulatedTables tables = simulate_experiment_tables(rc.experiment);
  write_csv(tables.train, (dir / "train.csv").string());
  write_csv(tables.test, (dir / "test.csv").string());
  write_resolved_config(rc, dir);
  std::cout << "wrote " << (dir / "train.csv").string() << " (" << tables.train.rows() << " x "
            << tables.train.stat_count() << " stats), " << (dir / "test.csv").string() << " ("
            << tables.test.rows() << " rows)\n";
  return 0;
}

struct TrainArgs {
  std::string table_path;
  std::string response = "theta1";
  std::string out_path = "forest.json";
  ForestConfig config;
  int threads = 0;
};

int cmd_train(const TrainArgs& args) {
  const ReferenceTable table = read_csv(args.table_path);
  const ResponseSpec response = ResponseSpec::parse(args.response);
  const auto& names = table.param_names();
  auto known = [&](const std::string& c) {
    return std::find(names.begin(), names.end(), c) != names.end();
  };
  if (!known(response.a) || (response.kind == ResponseSpec::Kind::ratio && !known(response.b)))
    throw ConfigError("response column '" +
                      (known(response.a) ? response.b : response.a) +
                      "' is not a parameter of '" + args.table_path + "'");
  const Forest forest = train(table, response, args.config, threads_from_env(args.threads));
  write_forest_json(forest, args.out_path);
  std::cout << "trained " << forest.trees.size() << " trees on " << table.rows()
            << " rows; wrote " << args.out_path << "\n";
  return 0;
}

struct PredictArgs {
  std::string forest_path;
  std::string queries_path;
  std::string table_path;  // training table; needed for oob / residual-forest
  std::string out_path = "summary.csv";
  std::string variance_method = "oob";
  std::vector<double> quantiles = {0.025, 0.05, 0.95, 0.975};
  std::string export_weights_prefix;
  int threads = 0;
};

int cmd_predict(const PredictArgs& args) {
  const Forest forest = read_forest_json(args.forest_path);
  const ReferenceTable queries = read_csv(args.queries_path);
  if (queries.stat_names() != forest.stat_names) {
    std::string msg = "query statistics do not match the forest's training statistics;";
    for (const auto& n : forest.stat_names)
      if (std::find(queries.stat_names().begin(), queries.stat_names().end(), n) ==
          queries.stat_names().end())
        msg += " missing:" + n;
    for (const auto& n : queries.stat_names())
      if (std::find(forest.stat_names.begin(), forest.stat_names.end(), n) ==
          forest.stat_names.end())
        msg += " extra:" + n;
    if (msg.back() == ';') msg += " (same names, different order)";
    throw DataError(msg);
  }
  if (args.variance_method != "oob" && args.variance_method != "cdf" &&
      args.variance_method != "residual-forest")
    throw ConfigError("unknown variance method '" + args.variance_method + "'");

  const int threads = threads_from_env(args.threads);
  std::optional<ReferenceTable> train_table;
  std::optional<OobPredictions> oob;
  std::optional<Forest> residual_forest;
  if (args.variance_method != "cdf") {
    if (args.table_path.empty())
      throw ConfigError("variance method '" + args.variance_method +
                        "' needs the training table (--table)");
    train_table = read_csv(args.table_path);
    oob = oob_predict(forest, *train_table, threads);
    if (oob->undefined_count > 0)
      std::cerr << "warning: " << oob->undefined_count
                << " training records lack OOB predictions\n";
    if (args.variance_method == "residual-forest") {
      ForestConfig fc = forest.config;
      fc.seed = derive_seed(forest.config.seed, "residual-variance");
      residual_forest =
          train_residual_variance_forest(*train_table, forest, *oob, fc, threads);
    }
  }

  std::ofstream out(args.out_path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + args.out_path + "' for writing");
  out << "query,expectation,variance";
  for (double a : args.quantiles) out << ",q" << fmt(a);
  out << '\n';
  double total_excluded = 0.0;
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const auto query = queries.stat_row(i);
    const WeightVector w = weights(forest, query);
    const double mean = expectation(w, forest.responses);
    double variance;
    if (args.variance_method == "oob") {
      double excluded = 0.0;
      variance = variance_oob_weighted(w, forest.responses, *oob, &excluded);
      total_excluded += excluded;
    } else if (args.variance_method == "cdf") {
      variance = variance_cdf(w, forest.responses);
    } else {
      variance = predict_mean(*residual_forest, query);
    }
    out << i << ',' << fmt(mean) << ',' << fmt(variance);
    for (double a : args.quantiles) out << ',' << fmt(quantile(w, forest.responses, a));
    out << '\n';
    if (!args.export_weights_prefix.empty())
      write_weighted_sample_csv(w, forest.responses,
                                args.export_weights_prefix + std::to_string(i) + ".csv");
  }
  if (total_excluded > 0.0)
    std::cerr << "warning: excluded OOB-undefined weight mass totalling "
              << fmt(total_excluded) << " across queries\n";
  std::cout << "wrote " << args.out_path << " (" << queries.rows() << " queries)\n";
  return 0;
}

int cmd_evaluate(const RunConfig& rc) {
  const fs::path dir(rc.output_dir);
  ensure_dir(dir);
  write_resolved_config(rc, dir);
  try {
    const BenchmarkResult result = run_benchmark(rc.experiment);
    result.report.write_csv((dir / "report.csv").string());
    result.report.write_json((dir / "report.json").string());
  } catch (...) {
    std::ofstream marker(dir / "FAILED");
    marker << "evaluation did not complete; see stderr\n";
    throw;
  }
  std::cout << "wrote " << (dir / "report.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& rc, const std::string& axis_name,
              const std::vector<double>& values) {
  const fs::path dir(rc.output_dir);
  ensure_dir(dir);
  write_resolved_config(rc, dir);
  const SweepAxis axis = parse_sweep_axis(axis_name);
  const auto points = sweep(rc.experiment, axis, values);
  std::ofstream combined(dir / "sweep.csv", std::ios::binary);
  if (!combined) throw DataError("cannot write sweep.csv");
  combined << "axis,axis_value,method,tolerance,target,metric,value\n";
  for (const auto& point : points) {
    const std::string tag = fmt(point.axis_value);
    point.report.write_csv((dir / ("report_" + axis_name + "_" + tag + ".csv")).string());
    for (const auto& row : point.report.rows) {
      combined << axis_name << ',' << tag << ',' << row.method << ',';
      if (std::isnan(row.tolerance))
        combined << "NA";
      else
        combined << fmt(row.tolerance);
      combined << ',' << row.target << ',' << row.metric << ',' << fmt(row.value) << '\n';
    }
  }
  std::cout << "wrote " << (dir / "sweep.csv").string() << " (" << points.size()
            << " axis points)\n";
  return 0;
}

int cmd_importance(const std::string& forest_path, const std::string& out_path) {
  const Forest forest = read_forest_json(forest_path);
  write_importance_csv(variable_importance(forest), out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_oob_curve(const std::string& forest_path, const std::string& table_path,
                  const std::vector<int>& checkpoints, const std::string& out_path,
                  int threads) {
  const Forest forest = read_forest_json(forest_path);
  const ReferenceTable table = read_csv(table_path);
  const auto curve = oob_mse_curve(forest, table, checkpoints, threads_from_env(threads));
  write_oob_curve_csv(curve, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ABC random-forest posterior inference"};
  app.require_subcommand(1);

  std::string config_path, out_dir_override;
  std::optional<std::uint64_t> seed_override;
  int threads_override = 0;

  auto add_config_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir_override, "override output directory");
    sub->add_option("--seed", seed_override, "override master seed");
    sub->add_option("--threads", threads_override, "worker threads (0 = all cores)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "write train/test reference tables");
  add_config_opts(simulate);

  CLI::App* evaluate = app.add_subcommand("evaluate", "run the benchmark and write reports");
  add_config_opts(evaluate);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the benchmark along one axis");
  add_config_opts(sweep_cmd);
  std::string axis_name;
  std::vector<double> axis_values;
  sweep_cmd->add_option("--axis", axis_name, "table_size | tree_count | min_node_size")
      ->required();
  sweep_cmd->add_option("--values", axis_values, "axis values")->required()->delimiter(',');

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a forest from a table CSV");
  train_cmd->add_option("--table", train_args.table_path, "reference table CSV")->required();
  train_cmd->add_option("--response", train_args.response,
                        "parameter column or transform, e.g. theta1 or ratio(N2,Na)");
  train_cmd->add_option("--out", train_args.out_path, "forest JSON path");
  train_cmd->add_option("--trees", train_args.config.tree_count, "number of trees");
  train_cmd->add_option("--mtry", train_args.config.mtry, "covariates per split (0 = k/3)");
  train_cmd->add_option("--min-node-size", train_args.config.min_node_size, "leaf size bound");
  train_cmd->add_option("--seed", train_args.config.seed, "forest seed");
  train_cmd->add_option("--threads", train_args.threads, "worker threads");

  PredictArgs predict_args;
  CLI::App* predict_cmd = app.add_subcommand("predict", "posterior summaries for queries");
  predict_cmd->add_option("--forest", predict_args.forest_path, "forest JSON")->required();
  predict_cmd->add_option("--queries", predict_args.queries_path, "query CSV")->required();
  predict_cmd->add_option("--table", predict_args.table_path,
                          "training table CSV (required for oob / residual-forest variance)");
  predict_cmd->add_option("--out", predict_args.out_path, "summary CSV path");
  predict_cmd->add_option("--variance-method", predict_args.variance_method,
                          "oob | cdf | residual-forest");
  predict_cmd->add_option("--quantiles", predict_args.quantiles, "quantile orders")
      ->delimiter(',');
  predict_cmd->add_option("--export-weights", predict_args.export_weights_prefix,
                          "write per-query weighted samples to <prefix><i>.csv");
  predict_cmd->add_option("--threads", predict_args.threads, "worker threads");

  std::string imp_forest, imp_out = "importance.csv";
  CLI::App* importance_cmd = app.add_subcommand("importance", "variable importance CSV");
  importance_cmd->add_option("--forest", imp_forest, "forest JSON")->required();
  importance_cmd->add_option("--out", imp_out, "output CSV path");

  std::string curve_forest, curve_table, curve_out = "oob_curve.csv";
  std::vector<int> curve_checkpoints;
  int curve_threads = 0;
  CLI::App* curve_cmd = app.add_subcommand("oob-curve", "OOB MSE vs number of trees");
  curve_cmd->add_option("--forest", curve_forest, "forest JSON")->required();
  curve_cmd->add_option("--table", curve_table, "training table CSV")->required();
  curve_cmd->add_option("--checkpoints", curve_checkpoints, "tree-count checkpoints")
      ->required()
      ->delimiter(',');
  curve_cmd->add_option("--out", curve_out, "output CSV path");
  curve_cmd->add_option("--threads", curve_threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    auto loaded_config = [&]() {
      RunConfig rc = load_config(config_path);
      if (!out_dir_override.empty()) rc.output_dir = out_dir_override;
      if (seed_override) rc.experiment.seed = *seed_override;
      if (threads_override != 0) rc.experiment.threads = threads_override;
      rc.experiment.threads = threads_from_env(rc.experiment.threads);
      return rc;
    };
    if (simulate->parsed()) return cmd_simulate(loaded_config());
    if (evaluate->parsed()) return cmd_evaluate(loaded_config());
    if (sweep_cmd->parsed()) return cmd_sweep(loaded_config(), axis_name, axis_values);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (predict_cmd->parsed()) return cmd_predict(predict_args);
    if (importance_cmd->parsed()) return cmd_importance(imp_forest, imp_out);
    if (curve_cmd->parsed())
      return cmd_oob_curve(curve_forest, curve_table, curve_checkpoints, curve_out,
                           curve_threads);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
