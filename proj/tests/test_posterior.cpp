#include <doctest.h>

#include <cmath>

#include "abcrf/models.hpp"
#include "abcrf/posterior.hpp"
#include "abcrf/qrf.hpp"
#include "abcrf/rng.hpp"
#include "test_util.hpp"

using namespace abcrf;

namespace {

ForestConfig cfg_of(int trees, std::uint64_t seed, int min_node = 5) {
  ForestConfig cfg;
  cfg.tree_count = trees;
  cfg.seed = seed;
  cfg.min_node_size = min_node;
  return cfg;
}

// Two single-leaf trees over two records; record 0 is in-bag only in tree 0,
// record 1 only in tree 1.
Forest two_tree_forest() {
  Forest f;
  f.config.tree_count = 2;
  f.config.mtry = 1;
  f.config.min_node_size = 5;
  f.response_name = "p0";
  f.stat_names = {"s0"};
  f.train_rows = 2;
  f.responses = {10.0, 20.0};
  for (int b = 0; b < 2; ++b) {
    Tree tree;
    tree.nodes.resize(1);
    tree.nodes[0].member_begin = 0;
    tree.nodes[0].member_end = 1;
    tree.member_index = {static_cast<std::uint32_t>(b)};
    tree.member_count = {2};
    tree.nodes[0].leaf_mean = f.responses[b];
    tree.rss_decrease.assign(1, 0.0);
    f.trees.push_back(std::move(tree));
  }
  f.rebuild_inbag();
  return f;
}

ReferenceTable constant_response_table(std::size_t n, double c) {
  abcrf::Rng rng(5);
  std::vector<double> stats(n * 2), params(n, c);
  for (double& v : stats) v = rng.uniform01();
  return ReferenceTable({"p0"}, {"s0", "s1"}, params, stats);
}

}  // namespace

TEST_CASE("oob predictions use only the trees that exclude a record") {
  const Forest f = two_tree_forest();
  const ReferenceTable table({"p0"}, {"s0"}, {10.0, 20.0}, {0.1, 0.9});
  const OobPredictions oob = oob_predict(f, table);
  REQUIRE(oob.defined[0]);
  REQUIRE(oob.defined[1]);
  CHECK(oob.values[0] == 20.0);  // only tree 1 is OOB for record 0
  CHECK(oob.values[1] == 10.0);
  CHECK(oob.undefined_count == 0);
}

TEST_CASE("constant responses give constant oob predictions and zero variance") {
  const ReferenceTable table = constant_response_table(60, 4.5);
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(10, 3));
  const OobPredictions oob = oob_predict(forest, table);
  for (std::size_t t = 0; t < table.rows(); ++t)
    if (oob.defined[t]) CHECK(oob.values[t] == 4.5);
  CHECK(oob_mse(forest, oob) == 0.0);

  const WeightVector w = weights(forest, std::vector<double>{0.5, 0.5});
  CHECK(variance_oob_weighted(w, forest.responses, oob) == 0.0);
  CHECK(variance_cdf(w, forest.responses) == 0.0);
  CHECK(variance_residual_forest(table, forest, oob, std::vector<double>{0.5, 0.5},
                                 cfg_of(10, 7)) == 0.0);
}

TEST_CASE("variance_cdf closed-form examples") {
  std::vector<double> responses = {0.0, 2.0};
  WeightVector w;
  w.index = {0, 1};
  w.weight = {0.5, 0.5};
  CHECK(variance_cdf(w, responses) == doctest::Approx(1.0).epsilon(1e-15));

  WeightVector point;
  point.index = {1};
  point.weight = {1.0};
  CHECK(variance_cdf(point, responses) == 0.0);
}

TEST_CASE("method-1 variance equals the brute-force weighted residual sum") {
  const ReferenceTable table = testutil::random_table(30, 3, 91);
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(5, 11));
  const OobPredictions oob = oob_predict(forest, table);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = testutil::random_query(3, rng);
    const WeightVector w = weights(forest, q);
    const auto oracle_w = testutil::brute_force_weights(forest, table, q);
    // At B=5 some records are in-bag everywhere; the estimator excludes them
    // and renormalizes, and the oracle replays that.
    double expect = 0.0, kept = 0.0, excluded = 0.0;
    for (std::uint32_t t = 0; t < table.rows(); ++t) {
      if (oracle_w[t] == 0.0) continue;
      if (!oob.defined[t]) {
        excluded += oracle_w[t];
        continue;
      }
      const double r = forest.responses[t] - oob.values[t];
      expect += oracle_w[t] * r * r;
      kept += oracle_w[t];
    }
    if (excluded > 0.0) expect /= kept;
    double reported_excluded = 0.0;
    CHECK(variance_oob_weighted(w, forest.responses, oob, &reported_excluded) == expect);
    CHECK(reported_excluded == excluded);
  }
}

TEST_CASE("variance_oob_weighted renormalizes over masked records") {
  const Forest f = two_tree_forest();
  OobPredictions oob;
  oob.values = {12.0, 0.0};
  oob.defined = {1, 0};
  oob.undefined_count = 1;
  WeightVector w;
  w.index = {0, 1};
  w.weight = {0.5, 0.5};
  double excluded = 0.0;
  // Only record 0 contributes: (10-12)^2 = 4, renormalized by kept mass 0.5.
  CHECK(variance_oob_weighted(w, f.responses, oob, &excluded) ==
        doctest::Approx(4.0).epsilon(1e-15));
  CHECK(excluded == 0.5);

  OobPredictions none;
  none.values = {0.0, 0.0};
  none.defined = {0, 0};
  none.undefined_count = 2;
  CHECK_THROWS_AS(variance_oob_weighted(w, f.responses, none), NumericError);
}

TEST_CASE("residual-forest variance is the product-forest prediction and is nonnegative") {
  const ReferenceTable table = testutil::random_table(80, 3, 93);
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(8, 17));
  const OobPredictions oob = oob_predict(forest, table);
  const Forest rf2 =
      train_residual_variance_forest(table, forest, oob, cfg_of(8, 19));
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = testutil::random_query(3, rng);
    const double direct = predict_mean(rf2, q);
    const WeightVector w2 = weights(rf2, q);
    CHECK(std::fabs(direct - expectation(w2, rf2.responses)) <= 1e-12);
    CHECK(direct >= 0.0);
  }
}

TEST_CASE("covariance of a transform with itself reproduces the residual forest") {
  const ReferenceTable table = testutil::random_table(60, 3, 95);
  const ForestConfig cfg = cfg_of(6, 23);
  Rng rng(17);
  const auto q = testutil::random_query(3, rng);
  const double cov = covariance(table, q, ResponseSpec::column("p0"),
                                ResponseSpec::column("p0"), cfg);

  // Replicate the covariance() construction with its own derived seeds.
  ForestConfig tau_cfg = cfg;
  tau_cfg.seed = derive_seed(cfg.seed, "cov-tau");
  ForestConfig prod_cfg = cfg;
  prod_cfg.seed = derive_seed(cfg.seed, "cov-product");
  const Forest marginal = train(table, ResponseSpec::column("p0"), tau_cfg);
  const OobPredictions oob = oob_predict(marginal, table);
  const Forest rf2 = train_residual_variance_forest(table, marginal, oob, prod_cfg);
  CHECK(cov == predict_mean(rf2, q));
  CHECK(cov >= 0.0);
}

TEST_CASE("covariance estimates center near zero for independent parameters") {
  // tau and sigma depend on disjoint noise given the statistics, so the true
  // conditional covariance is zero.
  const std::size_t n = 3000;
  Rng rng(19);
  std::vector<double> stats(n * 2), pa(n), pb(n);
  for (std::size_t i = 0; i < n; ++i) {
    stats[i * 2] = rng.uniform01();
    stats[i * 2 + 1] = rng.uniform01();
    pa[i] = stats[i * 2] + 0.3 * rng.normal();
    pb[i] = stats[i * 2 + 1] + 0.3 * rng.normal();
  }
  std::vector<double> params(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    params[i * 2] = pa[i];
    params[i * 2 + 1] = pb[i];
  }
  const ReferenceTable table({"a", "b"}, {"s0", "s1"}, params, stats);

  const ForestConfig cfg = cfg_of(100, 29);
  ForestConfig ca = cfg, cb = cfg, cp = cfg;
  ca.seed = derive_seed(cfg.seed, "ia");
  cb.seed = derive_seed(cfg.seed, "ib");
  cp.seed = derive_seed(cfg.seed, "ip");
  const Forest fa = train(table, ResponseSpec::column("a"), ca);
  const Forest fb = train(table, ResponseSpec::column("b"), cb);
  const OobPredictions oa = oob_predict(fa, table);
  const OobPredictions ob = oob_predict(fb, table);
  const Forest product =
      train_covariance_forest(table, fa.responses, oa, fb.responses, ob, cp);

  Rng qrng(31);
  const int n_queries = 100;
  double mean = 0.0, m2 = 0.0;
  std::vector<double> cov(n_queries);
  for (int i = 0; i < n_queries; ++i) {
    cov[i] = predict_mean(product, testutil::random_query(2, qrng));
    mean += cov[i];
  }
  mean /= n_queries;
  for (int i = 0; i < n_queries; ++i) m2 += (cov[i] - mean) * (cov[i] - mean);
  const double se = std::sqrt(m2 / (n_queries - 1) / n_queries);
  // True covariance given stats is 0; accept 2 Monte Carlo standard errors
  // plus a floor for the estimator's own bias at this scale.
  CHECK(std::fabs(mean) <= std::max(2.0 * se, 0.01));
}

TEST_CASE("importance is zero for unused covariates and ranks planted signal first") {
  // s1 is constant: no split can use it.
  const std::size_t n = 200;
  Rng rng(37);
  std::vector<double> stats(n * 2), params(n);
  for (std::size_t i = 0; i < n; ++i) {
    stats[i * 2] = rng.uniform01();
    stats[i * 2 + 1] = 1.0;
    params[i] = stats[i * 2];
  }
  const ReferenceTable table({"p0"}, {"signal", "flat"}, params, stats);
  ForestConfig cfg = cfg_of(20, 41);
  cfg.mtry = 2;
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg);
  const auto report = variable_importance(forest);
  REQUIRE(report.size() == 2);
  CHECK(report[0].statistic == "signal");
  CHECK(report[0].importance > 0.0);
  CHECK(report[1].statistic == "flat");
  CHECK(report[1].importance == 0.0);

  // Response = first covariate exactly; second is pure noise.
  std::vector<double> stats2(n * 2), params2(n);
  for (std::size_t i = 0; i < n; ++i) {
    stats2[i * 2] = rng.uniform01();
    stats2[i * 2 + 1] = rng.uniform01();
    params2[i] = stats2[i * 2];
  }
  const ReferenceTable planted({"p0"}, {"x1", "x2"}, params2, stats2);
  const Forest pf = train(planted, ResponseSpec::column("p0"), cfg);
  const auto rep2 = variable_importance(pf);
  REQUIRE(rep2[0].statistic == "x1");
  CHECK(rep2[0].importance >= 10.0 * rep2[1].importance);
}

TEST_CASE("importance totals conserve the recorded rss decreases") {
  const ReferenceTable table = testutil::random_table(100, 4, 97);
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(12, 43));
  const auto report = variable_importance(forest);
  double lhs = 0.0;
  for (const auto& e : report) lhs += e.importance;
  double rhs = 0.0;
  for (const Tree& tree : forest.trees)
    for (double d : tree.rss_decrease) rhs += d;
  rhs /= static_cast<double>(forest.trees.size());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("oob mse curve matches full oob at the last checkpoint and validates input") {
  const ReferenceTable table = testutil::random_table(300, 4, 101);
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(40, 47));
  const OobPredictions oob = oob_predict(forest, table);
  const std::vector<int> checkpoints = {5, 20, 40};
  const auto curve = oob_mse_curve(forest, table, checkpoints);
  REQUIRE(curve.size() == 3);
  CHECK(curve[2].first == 40);
  CHECK(curve[2].second == doctest::Approx(oob_mse(forest, oob)).epsilon(1e-14));

  CHECK_THROWS_AS(oob_mse_curve(forest, table, std::vector<int>{0, 10}), ConfigError);
  CHECK_THROWS_AS(oob_mse_curve(forest, table, std::vector<int>{10, 100}), ConfigError);
  CHECK_THROWS_AS(oob_mse_curve(forest, table, std::vector<int>{20, 10}), ConfigError);

  const ReferenceTable constant = constant_response_table(50, 1.0);
  const Forest cf = train(constant, ResponseSpec::column("p0"), cfg_of(10, 49));
  for (const auto& [b, mse] : oob_mse_curve(cf, constant, std::vector<int>{1, 5, 10}))
    CHECK(mse == 0.0);
}

TEST_CASE("oob mse improves with more trees on the normal toy (majority of 5 runs)") {
  const NormalToyModel model(10, 10, 51);
  int wins = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const ReferenceTable table =
        simulate_normal_toy(model, 1500, 0, static_cast<std::uint64_t>(rep + 10));
    ForestConfig cfg = cfg_of(1000, 53 + static_cast<std::uint64_t>(rep));
    const Forest forest = train(table, ResponseSpec::column("theta1"), cfg);
    const auto curve = oob_mse_curve(forest, table, std::vector<int>{10, 1000});
    if (curve[1].second <= curve[0].second) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_CASE("no record is left without an oob prediction at desk scale") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ReferenceTable table = testutil::random_table(100, 3, 200 + seed);
    const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(500, seed));
    const OobPredictions oob = oob_predict(forest, table);
    CHECK(oob.undefined_count == 0);
  }
}

TEST_CASE("importance csv is sorted descending") {
  testutil::TempDir tmp("imp");
  const ReferenceTable table = testutil::random_table(100, 5, 103);
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg_of(10, 59));
  const auto report = variable_importance(forest);
  for (std::size_t i = 1; i < report.size(); ++i)
    CHECK(report[i - 1].importance >= report[i].importance);
  write_importance_csv(report, tmp.path("imp.csv"));
  const std::string body = testutil::slurp(tmp.path("imp.csv"));
  CHECK(body.rfind("statistic,importance\n", 0) == 0);
}
