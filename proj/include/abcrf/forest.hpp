#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "abcrf/reftable.hpp"

namespace abcrf {

struct ForestConfig {
  int tree_count = 500;
  int mtry = 0;  // 0 resolves to max(1, k/3)
  int min_node_size = 5;
  std::uint64_t seed = 0;
};

// Selects the regression response: a parameter column or a transform of
// parameter columns ("theta1", "log(theta2)", "ratio(N2,Na)").
struct ResponseSpec {
  enum class Kind { column, log, ratio };
  Kind kind = Kind::column;
  std::string a;
  std::string b;

  static ResponseSpec column(std::string name);
  static ResponseSpec parse(const std::string& text);
  std::string name() const;
  std::vector<double> evaluate(const ReferenceTable& table) const;
};

struct TreeNode {
  std::int32_t split_var = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double leaf_mean = 0.0;
  std::uint32_t member_begin = 0;  // into the tree member arrays, leaves only
  std::uint32_t member_end = 0;

  bool is_leaf() const { return split_var < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
  // Leaf membership, leaf-contiguous: training indices with their bootstrap
  // multiplicities. Within a leaf, indices are ascending.
  std::vector<std::uint32_t> member_index;
  std::vector<std::uint32_t> member_count;
  // Accumulated RSS decrease per covariate (variable importance input).
  std::vector<double> rss_decrease;

  std::int32_t walk(std::span<const double> query) const {
    std::int32_t id = 0;
    while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
      id = query[static_cast<std::size_t>(nd.split_var)] <= nd.threshold ? nd.left : nd.right;
    }
    return id;
  }

  std::uint64_t leaf_mass(std::int32_t node) const {
    const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
    std::uint64_t mass = 0;
    for (std::uint32_t m = nd.member_begin; m < nd.member_end; ++m) mass += member_count[m];
    return mass;
  }
};

class Forest {
 public:
  ForestConfig config;  // resolved (mtry concrete)
  std::string response_name;
  std::vector<std::string> stat_names;
  std::uint32_t train_rows = 0;
  std::vector<double> responses;  // training responses, aligned to row index
  std::vector<Tree> trees;

  std::size_t stat_count() const { return stat_names.size(); }

  // n_b^(t) for tree b, reassembled from leaf membership (each in-bag record
  // sits in exactly one leaf).
  std::vector<std::uint32_t> bootstrap_counts(std::size_t b) const;

  bool in_bag(std::size_t b, std::uint32_t t) const {
    return inbag_[b][t] != 0;
  }

  // Rebuilds the in-bag bitmaps; called after training or deserialization.
  void rebuild_inbag();

  void check_query(std::span<const double> query) const;

 private:
  std::vector<std::vector<std::uint8_t>> inbag_;
};

// Per-node covariate sampling hook. The default draws mtry distinct indices
// from a stream keyed by (forest seed, tree, node); tests can substitute a
// replayed/permuted sampler.
using CovariateSampler =
    std::function<void(std::uint64_t tree, std::uint64_t node, std::size_t stat_count,
                       int mtry, std::vector<int>& out)>;

Forest train(const ReferenceTable& table, const ResponseSpec& response, ForestConfig config,
             int threads = 0);
Forest train_with_sampler(const ReferenceTable& table, const ResponseSpec& response,
                          ForestConfig config, int threads, const CovariateSampler& sampler);

// Convenience for pre-extracted responses (used by the residual/product
// forests whose responses are not table columns).
Forest train_on_responses(const ReferenceTable& table, std::vector<double> responses,
                          const std::string& response_name, ForestConfig config,
                          int threads = 0);

std::int32_t assign_leaf(const Tree& tree, std::span<const double> query, std::size_t dim);
double predict_mean(const Forest& forest, std::span<const double> query);

// Versioned JSON serialization; round-trips exactly.
void write_forest_json(const Forest& forest, const std::string& path);
Forest read_forest_json(const std::string& path);

}  // namespace abcrf
