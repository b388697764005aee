#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "abcrf/forest.hpp"
#include "abcrf/models.hpp"
#include "abcrf/qrf.hpp"
#include "abcrf/rng.hpp"
#include "test_util.hpp"

using namespace abcrf;

namespace {

ForestConfig small_config(int trees, std::uint64_t seed, int mtry = 0, int min_node = 5) {
  ForestConfig cfg;
  cfg.tree_count = trees;
  cfg.seed = seed;
  cfg.mtry = mtry;
  cfg.min_node_size = min_node;
  return cfg;
}

// Recursively collects per-node member sets from the leaf arrays and checks
// that every split partitions its records by the stored predicate.
struct NodeAudit {
  const Tree& tree;
  const ReferenceTable& table;
  double worst_rss_violation = 0.0;

  std::vector<std::uint32_t> audit(std::int32_t id) {
    const TreeNode& nd = tree.nodes[id];
    if (nd.is_leaf()) {
      std::vector<std::uint32_t> members(tree.member_index.begin() + nd.member_begin,
                                         tree.member_index.begin() + nd.member_end);
      return members;
    }
    auto left = audit(nd.left);
    auto right = audit(nd.right);
    for (std::uint32_t t : left) CHECK(table.stat(t, nd.split_var) <= nd.threshold);
    for (std::uint32_t t : right) CHECK(table.stat(t, nd.split_var) > nd.threshold);

    // Child RSS sum must not exceed the parent RSS.
    auto rss = [&](const std::vector<std::uint32_t>& members) {
      double w = 0, s = 0;
      for (std::uint32_t t : members) {
        const double c = count_of(t);
        w += c;
        s += c * response_of(t);
      }
      const double mean = s / w;
      double out = 0;
      for (std::uint32_t t : members) {
        const double d = response_of(t) - mean;
        out += count_of(t) * d * d;
      }
      return out;
    };
    auto merged = left;
    merged.insert(merged.end(), right.begin(), right.end());
    const double parent_rss = rss(merged);
    const double child_rss = rss(left) + rss(right);
    worst_rss_violation =
        std::max(worst_rss_violation, child_rss - parent_rss);
    return merged;
  }

  double count_of(std::uint32_t t) const {
    for (std::size_t m = 0; m < tree.member_index.size(); ++m)
      if (tree.member_index[m] == t) return tree.member_count[m];
    return 0;
  }
  double response_of(std::uint32_t t) const { return responses->at(t); }
  const std::vector<double>* responses = nullptr;
};

}  // namespace

TEST_CASE("bootstrap multiplicities sum to N in every tree") {
  const ReferenceTable table = testutil::random_table(50, 4, 11);
  const Forest forest = train(table, ResponseSpec::column("p0"), small_config(20, 3));
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    const auto counts = forest.bootstrap_counts(b);
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == table.rows());
  }
}

TEST_CASE("leaf means equal the multiplicity-weighted member mean to 1e-12") {
  const ReferenceTable table = testutil::random_table(80, 5, 13);
  const Forest forest = train(table, ResponseSpec::column("p0"), small_config(10, 5));
  for (const Tree& tree : forest.trees) {
    for (const TreeNode& nd : tree.nodes) {
      if (!nd.is_leaf()) continue;
      double w = 0, s = 0;
      std::uint64_t mass = 0;
      for (std::uint32_t m = nd.member_begin; m < nd.member_end; ++m) {
        const double c = tree.member_count[m];
        w += c;
        s += c * forest.responses[tree.member_index[m]];
        mass += tree.member_count[m];
      }
      CHECK(mass >= 1);
      CHECK(std::fabs(nd.leaf_mean - s / w) <= 1e-12 * std::max(1.0, std::fabs(nd.leaf_mean)));
    }
  }
}

TEST_CASE("splits partition records by the stored predicate with nonnegative gain") {
  const ReferenceTable table = testutil::random_table(60, 4, 17);
  const Forest forest = train(table, ResponseSpec::column("p0"), small_config(8, 7));
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    NodeAudit audit{forest.trees[b], table};
    audit.responses = &forest.responses;
    const auto all = audit.audit(0);
    // Root covers exactly the in-bag records.
    const auto counts = forest.bootstrap_counts(b);
    std::set<std::uint32_t> in_bag;
    for (std::uint32_t t = 0; t < table.rows(); ++t)
      if (counts[t] > 0) in_bag.insert(t);
    CHECK(std::set<std::uint32_t>(all.begin(), all.end()) == in_bag);
    CHECK(audit.worst_rss_violation <= 1e-9);
  }
  for (const Tree& tree : forest.trees)
    for (std::size_t j = 0; j < tree.rss_decrease.size(); ++j)
      CHECK(tree.rss_decrease[j] >= 0.0);
}

TEST_CASE("a table of identical rows trains single-leaf trees") {
  std::vector<double> params(12, 2.5), stats;
  for (int i = 0; i < 12; ++i) {
    stats.push_back(1.0);
    stats.push_back(4.0);
  }
  const ReferenceTable table({"p0"}, {"s0", "s1"}, params, stats);
  const Forest forest = train(table, ResponseSpec::column("p0"), small_config(6, 1));
  for (const Tree& tree : forest.trees) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].leaf_mean == 2.5);
  }
  CHECK(predict_mean(forest, std::vector<double>{9.0, -3.0}) == 2.5);
}

TEST_CASE("training is deterministic across thread counts") {
  const ReferenceTable table = testutil::random_table(300, 6, 23);
  const Forest a = train(table, ResponseSpec::column("p0"), small_config(16, 9), 1);
  const Forest b = train(table, ResponseSpec::column("p0"), small_config(16, 9), 4);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const Tree& ta = a.trees[t];
    const Tree& tb = b.trees[t];
    REQUIRE(ta.nodes.size() == tb.nodes.size());
    for (std::size_t i = 0; i < ta.nodes.size(); ++i) {
      CHECK(ta.nodes[i].split_var == tb.nodes[i].split_var);
      CHECK(ta.nodes[i].threshold == tb.nodes[i].threshold);
      CHECK(ta.nodes[i].leaf_mean == tb.nodes[i].leaf_mean);
    }
    CHECK(ta.member_index == tb.member_index);
    CHECK(ta.member_count == tb.member_count);
    CHECK(ta.rss_decrease == tb.rss_decrease);
  }
}

TEST_CASE("assign_leaf follows the <= rule and matches a predicate replay") {
  // Hand-built depth-1 tree: split on covariate 1 at 0.5.
  Tree tree;
  tree.nodes.resize(3);
  tree.nodes[0].split_var = 1;
  tree.nodes[0].threshold = 0.5;
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  tree.nodes[1].leaf_mean = -1.0;
  tree.nodes[2].leaf_mean = 1.0;
  CHECK(assign_leaf(tree, std::vector<double>{0.0, 0.5}, 2) == 1);  // boundary goes left
  CHECK(assign_leaf(tree, std::vector<double>{0.0, 0.5000001}, 2) == 2);
  CHECK(assign_leaf(tree, std::vector<double>{9.0, -1.0}, 2) == 1);
  CHECK_THROWS_AS(assign_leaf(tree, std::vector<double>{1.0}, 2), DataError);

  // Trained tree vs an independent replay of the stored predicates.
  const ReferenceTable table = testutil::random_table(100, 5, 31);
  const Forest forest = train(table, ResponseSpec::column("p0"), small_config(4, 2));
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto q = testutil::random_query(5, rng);
    for (const Tree& t : forest.trees) {
      std::int32_t id = 0;
      while (t.nodes[id].split_var >= 0) {
        const TreeNode& nd = t.nodes[id];
        id = q[nd.split_var] <= nd.threshold ? nd.left : nd.right;
      }
      CHECK(assign_leaf(t, q, 5) == id);
    }
  }
}

TEST_CASE("single-leaf trees route every query to the same leaf") {
  const ReferenceTable table = testutil::random_table(10, 3, 37);
  ForestConfig cfg = small_config(3, 4);
  cfg.min_node_size = 1000;  // forces root leaves
  const Forest forest = train(table, ResponseSpec::column("p0"), cfg);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto q = testutil::random_query(3, rng);
    for (const Tree& t : forest.trees) {
      REQUIRE(t.nodes.size() == 1);
      CHECK(assign_leaf(t, q, 3) == 0);
    }
  }
}

TEST_CASE("predict_mean averages leaf means") {
  const ReferenceTable table = testutil::random_table(40, 3, 41);
  const Forest one = train(table, ResponseSpec::column("p0"), small_config(1, 6));
  Rng rng(7);
  const auto q = testutil::random_query(3, rng);
  const Tree& t = one.trees[0];
  CHECK(predict_mean(one, q) == t.nodes[t.walk(q)].leaf_mean);

  // Matches the weighted expectation from the qrf layer to 1e-12.
  const ReferenceTable tiny = testutil::random_table(30, 3, 43);
  const Forest forest = train(tiny, ResponseSpec::column("p0"), small_config(5, 8));
  for (int i = 0; i < 25; ++i) {
    const auto query = testutil::random_query(3, rng);
    const WeightVector w = weights(forest, query);
    CHECK(std::fabs(predict_mean(forest, query) - expectation(w, forest.responses)) <= 1e-12);
  }
}

TEST_CASE("column permutation with replayed covariate draws gives identical predictions") {
  const std::size_t k = 6;
  const ReferenceTable table = testutil::random_table(150, k, 47);
  const ForestConfig cfg = small_config(10, 12, 2);

  // Permute statistic columns and replay the original sampler through the
  // permutation, so each node examines the same data under new labels.
  const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  std::vector<std::string> pnames(k);
  std::vector<double> pstats(table.rows() * k), pparams(table.rows());
  for (std::size_t j = 0; j < k; ++j) pnames[perm[j]] = table.stat_names()[j];
  for (std::size_t i = 0; i < table.rows(); ++i) {
    pparams[i] = table.param(i, 0);
    for (std::size_t j = 0; j < k; ++j) pstats[i * k + perm[j]] = table.stat(i, j);
  }
  const ReferenceTable permuted({"p0"}, pnames, pparams, pstats);

  const Forest base = train(table, ResponseSpec::column("p0"), cfg);

  CovariateSampler replay = [&](std::uint64_t tree, std::uint64_t node, std::size_t kk,
                                int mtry, std::vector<int>& out) {
    out.resize(kk);
    std::iota(out.begin(), out.end(), 0);
    Rng rng(derive_seed(cfg.seed, "node-covariates", tree, node));
    for (int i = 0; i < mtry; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) +
                            rng.uniform_int(kk - static_cast<std::size_t>(i));
      std::swap(out[i], out[j]);
    }
    out.resize(mtry);
    for (int& v : out) v = static_cast<int>(perm[v]);
  };
  const Forest permuted_forest =
      train_with_sampler(permuted, ResponseSpec::column("p0"), cfg, 0, replay);

  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    const auto q = testutil::random_query(k, rng);
    std::vector<double> pq(k);
    for (std::size_t j = 0; j < k; ++j) pq[perm[j]] = q[j];
    CHECK(predict_mean(base, q) == predict_mean(permuted_forest, pq));
  }
}

TEST_CASE("forest json round-trips exactly and reruns byte-identically") {
  testutil::TempDir tmp("forest_io");
  const ReferenceTable table = testutil::random_table(120, 4, 53);
  const Forest forest = train(table, ResponseSpec::column("p0"), small_config(12, 15));
  write_forest_json(forest, tmp.path("f.json"));
  const Forest back = read_forest_json(tmp.path("f.json"));

  CHECK(back.config.seed == forest.config.seed);
  CHECK(back.response_name == forest.response_name);
  CHECK(back.stat_names == forest.stat_names);
  CHECK(back.responses == forest.responses);
  REQUIRE(back.trees.size() == forest.trees.size());
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto q = testutil::random_query(4, rng);
    CHECK(predict_mean(back, q) == predict_mean(forest, q));
  }

  write_forest_json(back, tmp.path("f2.json"));
  CHECK(testutil::slurp(tmp.path("f.json")) == testutil::slurp(tmp.path("f2.json")));

  std::ofstream(tmp.path("bad.json")) << "{\"format\":\"other\"}";
  CHECK_THROWS_AS(read_forest_json(tmp.path("bad.json")), DataError);
}

TEST_CASE("training validates its inputs") {
  const ReferenceTable table = testutil::random_table(20, 3, 59);
  CHECK_THROWS_AS(train(table, ResponseSpec::column("nope"), small_config(2, 1)), DataError);
  CHECK_THROWS_AS(train(table, ResponseSpec::column("p0"), small_config(0, 1)), ConfigError);
  CHECK_THROWS_AS(train(table, ResponseSpec::column("p0"), small_config(2, 1, 99)),
                  ConfigError);
  ForestConfig bad = small_config(2, 1);
  bad.min_node_size = 0;
  CHECK_THROWS_AS(train(table, ResponseSpec::column("p0"), bad), ConfigError);
}

TEST_CASE("response transforms evaluate and validate") {
  const ReferenceTable t({"a", "b"}, {"x"}, {1.0, 2.0, 4.0, 8.0}, {0.0, 0.0});
  CHECK(ResponseSpec::parse("a").evaluate(t) == std::vector<double>{1.0, 4.0});
  CHECK(ResponseSpec::parse("log(b)").evaluate(t) ==
        std::vector<double>{std::log(2.0), std::log(8.0)});
  CHECK(ResponseSpec::parse("ratio(b,a)").evaluate(t) == std::vector<double>{2.0, 2.0});
  CHECK(ResponseSpec::parse("ratio(b,a)").name() == "ratio(b,a)");
  CHECK_THROWS_AS(ResponseSpec::parse("ratio(b)"), ConfigError);
  const ReferenceTable neg({"a"}, {"x"}, {-1.0}, {0.0});
  CHECK_THROWS_AS(ResponseSpec::parse("log(a)").evaluate(neg), NumericError);
}
