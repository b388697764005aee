#include "abcrf/posterior.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "abcrf/parallel.hpp"
#include "abcrf/rng.hpp"

namespace abcrf {

namespace {

void check_trained_on(const Forest& forest, const ReferenceTable& table) {
  if (forest.train_rows != table.rows() || forest.stat_names != table.stat_names())
    throw DataError("forest was not trained on this table (row count or statistics differ)");
}

// Rebuilds a table restricted to the given rows (ascending), for auxiliary
// forests that must skip records without OOB predictions.
ReferenceTable subset_rows(const ReferenceTable& table, const std::vector<std::uint32_t>& rows) {
  std::vector<double> params, stats;
  params.reserve(rows.size() * table.param_count());
  stats.reserve(rows.size() * table.stat_count());
  for (std::uint32_t r : rows) {
    auto pr = table.param_row(r);
    auto sr = table.stat_row(r);
    params.insert(params.end(), pr.begin(), pr.end());
    stats.insert(stats.end(), sr.begin(), sr.end());
  }
  return ReferenceTable(table.param_names(), table.stat_names(), std::move(params),
                        std::move(stats));
}

std::vector<std::uint32_t> rows_defined_in(const OobPredictions& a, const OobPredictions& b) {
  std::vector<std::uint32_t> rows;
  for (std::uint32_t t = 0; t < a.defined.size(); ++t)
    if (a.defined[t] && b.defined[t]) rows.push_back(t);
  if (rows.empty()) throw NumericError("no training record has an OOB prediction");
  return rows;
}

}  // namespace

OobPredictions oob_predict(const Forest& forest, const ReferenceTable& table, int threads) {
  check_trained_on(forest, table);
  const std::size_t n = table.rows();
  OobPredictions out;
  out.values.assign(n, 0.0);
  out.defined.assign(n, 0);

  parallel_for(n, threads, [&](std::size_t t) {
    const auto query = table.stat_row(t);
    double acc = 0.0;
    int used = 0;
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
      if (forest.in_bag(b, static_cast<std::uint32_t>(t))) continue;
      const Tree& tree = forest.trees[b];
      acc += tree.nodes[static_cast<std::size_t>(tree.walk(query))].leaf_mean;
      ++used;
    }
    if (used > 0) {
      out.values[t] = acc / used;
      out.defined[t] = 1;
    }
  });
  for (auto d : out.defined)
    if (!d) ++out.undefined_count;
  return out;
}

double oob_mse(const Forest& forest, const OobPredictions& oob) {
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t t = 0; t < oob.values.size(); ++t) {
    if (!oob.defined[t]) continue;
    const double r = oob.values[t] - forest.responses[t];
    acc += r * r;
    ++used;
  }
  if (used == 0) throw NumericError("no OOB predictions defined");
  return acc / static_cast<double>(used);
}

double variance_cdf(const WeightVector& w, std::span<const double> responses) {
  const double mean = expectation(w, responses);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.index.size(); ++i) {
    const double d = responses[w.index[i]] - mean;
    acc += w.weight[i] * d * d;
  }
  return acc;
}

double variance_oob_weighted(const WeightVector& w, std::span<const double> responses,
                             const OobPredictions& oob, double* excluded_mass) {
  double acc = 0.0;
  double kept = 0.0;
  double excluded = 0.0;
  for (std::size_t i = 0; i < w.index.size(); ++i) {
    const std::uint32_t t = w.index[i];
    if (!oob.defined[t]) {
      excluded += w.weight[i];
      continue;
    }
    const double r = responses[t] - oob.values[t];
    acc += w.weight[i] * r * r;
    kept += w.weight[i];
  }
  if (excluded_mass) *excluded_mass = excluded;
  if (!(kept > 0.0))
    throw NumericError("variance_oob_weighted: entire weight support lacks OOB predictions");
  if (excluded > 0.0) acc /= kept;  // renormalize over the defined support
  return acc;
}

Forest train_residual_variance_forest(const ReferenceTable& table, const Forest& marginal,
                                      const OobPredictions& oob, ForestConfig config,
                                      int threads) {
  check_trained_on(marginal, table);
  std::vector<std::uint32_t> rows;
  for (std::uint32_t t = 0; t < table.rows(); ++t)
    if (oob.defined[t]) rows.push_back(t);
  if (rows.empty()) throw NumericError("no training record has an OOB prediction");
  std::vector<double> sq(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = marginal.responses[rows[i]] - oob.values[rows[i]];
    sq[i] = r * r;
  }
  const ReferenceTable sub =
      rows.size() == table.rows() ? table : subset_rows(table, rows);
  return train_on_responses(sub, std::move(sq),
                            "sq_residual(" + marginal.response_name + ")", config, threads);
}

double variance_residual_forest(const ReferenceTable& table, const Forest& marginal,
                                const OobPredictions& oob, std::span<const double> query,
                                ForestConfig config, int threads) {
  const Forest rf = train_residual_variance_forest(table, marginal, oob, config, threads);
  const double value = predict_mean(rf, query);
  if (value < 0.0)
    throw NumericError("residual-forest variance came out negative");
  return value;
}

Forest train_covariance_forest(const ReferenceTable& table, std::span<const double> tau,
                               const OobPredictions& tau_oob, std::span<const double> sigma,
                               const OobPredictions& sigma_oob, ForestConfig config,
                               int threads) {
  if (tau.size() != table.rows() || sigma.size() != table.rows())
    throw DataError("covariance responses must align with the table rows");
  const auto rows = rows_defined_in(tau_oob, sigma_oob);
  std::vector<double> products(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::uint32_t t = rows[i];
    products[i] = (tau[t] - tau_oob.values[t]) * (sigma[t] - sigma_oob.values[t]);
  }
  const ReferenceTable sub =
      rows.size() == table.rows() ? table : subset_rows(table, rows);
  return train_on_responses(sub, std::move(products), "oob_residual_product", config, threads);
}

double covariance(const ReferenceTable& table, std::span<const double> query,
                  const ResponseSpec& tau, const ResponseSpec& sigma, ForestConfig config,
                  int threads) {
  ForestConfig tau_cfg = config;
  tau_cfg.seed = derive_seed(config.seed, "cov-tau");
  ForestConfig prod_cfg = config;
  prod_cfg.seed = derive_seed(config.seed, "cov-product");

  const Forest tau_forest = train(table, tau, tau_cfg, threads);
  const OobPredictions tau_oob = oob_predict(tau_forest, table, threads);
  if (sigma.name() == tau.name()) {
    // One marginal forest serves both sides, so the product response is the
    // squared residual and the estimate coincides with the residual-forest
    // variance built from the same marginal.
    const Forest product = train_covariance_forest(table, tau_forest.responses, tau_oob,
                                                   tau_forest.responses, tau_oob, prod_cfg,
                                                   threads);
    return predict_mean(product, query);
  }
  ForestConfig sigma_cfg = config;
  sigma_cfg.seed = derive_seed(config.seed, "cov-sigma");
  const Forest sigma_forest = train(table, sigma, sigma_cfg, threads);
  const OobPredictions sigma_oob = oob_predict(sigma_forest, table, threads);
  const Forest product = train_covariance_forest(table, tau_forest.responses, tau_oob,
                                                 sigma_forest.responses, sigma_oob, prod_cfg,
                                                 threads);
  return predict_mean(product, query);
}

std::vector<ImportanceEntry> variable_importance(const Forest& forest) {
  const std::size_t k = forest.stat_names.size();
  std::vector<double> totals(k, 0.0);
  for (const Tree& tree : forest.trees)
    for (std::size_t j = 0; j < k; ++j) totals[j] += tree.rss_decrease[j];
  const auto b = static_cast<double>(forest.trees.size());
  std::vector<ImportanceEntry> report(k);
  std::vector<std::size_t> order(k);
  for (std::size_t j = 0; j < k; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return totals[a] > totals[c]; });
  for (std::size_t r = 0; r < k; ++r)
    report[r] = {forest.stat_names[order[r]], totals[order[r]] / b};
  return report;
}

void write_importance_csv(const std::vector<ImportanceEntry>& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "statistic,importance\n";
  char buf[40];
  for (const auto& e : report) {
    f << e.statistic << ',';
    auto r = std::to_chars(buf, buf + sizeof(buf), e.importance);
    f.write(buf, r.ptr - buf);
    f << '\n';
  }
}

std::vector<std::pair<int, double>> oob_mse_curve(const Forest& forest,
                                                  const ReferenceTable& table,
                                                  std::span<const int> checkpoints,
                                                  int threads) {
  check_trained_on(forest, table);
  const std::size_t n = table.rows();
  const std::size_t c = checkpoints.size();
  if (c == 0) throw ConfigError("oob_mse_curve requires at least one checkpoint");
  for (std::size_t i = 0; i < c; ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > static_cast<int>(forest.trees.size()))
      throw ConfigError("checkpoint " + std::to_string(checkpoints[i]) +
                        " outside [1, B=" + std::to_string(forest.trees.size()) + "]");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw ConfigError("checkpoints must be strictly ascending");
  }

  // Per record: squared error of the OOB prediction truncated to the first b
  // trees, for each checkpoint. NaN marks "no OOB tree yet".
  std::vector<double> sq(n * c, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n, threads, [&](std::size_t t) {
    const auto query = table.stat_row(t);
    const double truth = forest.responses[t];
    double acc = 0.0;
    int used = 0;
    std::size_t ci = 0;
    for (std::size_t b = 0; b < forest.trees.size() && ci < c; ++b) {
      if (!forest.in_bag(b, static_cast<std::uint32_t>(t))) {
        const Tree& tree = forest.trees[b];
        acc += tree.nodes[static_cast<std::size_t>(tree.walk(query))].leaf_mean;
        ++used;
      }
      while (ci < c && static_cast<int>(b) + 1 == checkpoints[ci]) {
        if (used > 0) {
          const double r = acc / used - truth;
          sq[t * c + ci] = r * r;
        }
        ++ci;
      }
    }
  });

  std::vector<std::pair<int, double>> curve(c);
  for (std::size_t ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = sq[t * c + ci];
      if (!std::isnan(v)) {
        acc += v;
        ++used;
      }
    }
    if (used == 0) throw NumericError("no record is OOB at checkpoint " +
                                      std::to_string(checkpoints[ci]));
    curve[ci] = {checkpoints[ci], acc / static_cast<double>(used)};
  }
  return curve;
}

void write_oob_curve_csv(const std::vector<std::pair<int, double>>& curve,
                         const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "b,mse\n";
  char buf[40];
  for (const auto& [b, mse] : curve) {
    f << b << ',';
    auto r = std::to_chars(buf, buf + sizeof(buf), mse);
    f.write(buf, r.ptr - buf);
    f << '\n';
  }
}

}  // namespace abcrf
