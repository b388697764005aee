#include "abcrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "abcrf/parallel.hpp"
#include "abcrf/rng.hpp"

namespace abcrf {

ResponseSpec ResponseSpec::column(std::string name) {
  ResponseSpec spec;
  spec.kind = Kind::column;
  spec.a = std::move(name);
  return spec;
}

ResponseSpec ResponseSpec::parse(const std::string& text) {
  ResponseSpec spec;
  auto inner = [&](std::size_t prefix) {
    return text.substr(prefix, text.size() - prefix - 1);
  };
  if (text.rfind("log(", 0) == 0 && text.back() == ')') {
    spec.kind = Kind::log;
    spec.a = inner(4);
  } else if (text.rfind("ratio(", 0) == 0 && text.back() == ')') {
    const std::string body = inner(6);
    const auto comma = body.find(',');
    if (comma == std::string::npos)
      throw ConfigError("ratio() response needs two comma-separated columns: " + text);
    spec.kind = Kind::ratio;
    spec.a = body.substr(0, comma);
    spec.b = body.substr(comma + 1);
  } else {
    spec.kind = Kind::column;
    spec.a = text;
  }
  if (spec.a.empty() || (spec.kind == Kind::ratio && spec.b.empty()))
    throw ConfigError("empty column in response '" + text + "'");
  return spec;
}

std::string ResponseSpec::name() const {
  switch (kind) {
    case Kind::column: return a;
    case Kind::log: return "log(" + a + ")";
    case Kind::ratio: return "ratio(" + a + "," + b + ")";
  }
  return a;
}

std::vector<double> ResponseSpec::evaluate(const ReferenceTable& table) const {
  const std::size_t ja = table.param_index(a);
  std::vector<double> out = table.param_column(ja);
  if (kind == Kind::log) {
    for (double& v : out) {
      if (!(v > 0.0)) throw NumericError("log response requires positive '" + a + "'");
      v = std::log(v);
    }
  } else if (kind == Kind::ratio) {
    const std::size_t jb = table.param_index(b);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double denom = table.param(i, jb);
      if (denom == 0.0) throw NumericError("ratio response divides by zero '" + b + "'");
      out[i] /= denom;
    }
  }
  return out;
}

namespace {

struct SplitChoice {
  double gain = -std::numeric_limits<double>::infinity();
  int var = -1;
  double threshold = 0.0;

  bool valid() const { return var >= 0; }

  // Equal-gain ties keep the earliest candidate in draw order (and, within a
  // covariate, the smallest threshold, since thresholds are scanned
  // ascending). Draw-order tie-breaking keeps the trees invariant under a
  // column permutation with replayed draws; index-based tie-breaking would
  // not be, because every covariate separating a two-record node ties.
  void consider(double g, int j, double thr) {
    if (g > gain) {
      gain = g;
      var = j;
      threshold = thr;
    }
  }
};

struct WorkItem {
  std::int32_t node;
  std::uint32_t begin;
  std::uint32_t end;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<double>& columns, const std::vector<double>& responses,
              std::size_t n_rows, std::size_t k, int mtry, int min_node_size,
              std::uint64_t boot_seed, std::uint64_t tree_index,
              const CovariateSampler& sampler)
      : columns_(columns),
        y_(responses),
        n_rows_(n_rows),
        k_(k),
        mtry_(mtry),
        min_mass_(std::max(2, min_node_size)),
        tree_index_(tree_index),
        sampler_(sampler) {
    counts_.assign(n_rows_, 0);
    Rng rng(boot_seed);
    for (std::size_t i = 0; i < n_rows_; ++i)
      counts_[rng.uniform_int(n_rows_)] += 1;
    idx_.reserve(n_rows_);
    for (std::uint32_t t = 0; t < n_rows_; ++t)
      if (counts_[t] > 0) idx_.push_back(t);
  }

  Tree build() {
    tree_.rss_decrease.assign(k_, 0.0);
    tree_.nodes.emplace_back();
    std::vector<WorkItem> stack;
    stack.push_back({0, 0, static_cast<std::uint32_t>(idx_.size())});
    while (!stack.empty()) {
      const WorkItem item = stack.back();
      stack.pop_back();
      process(item, stack);
    }
    return std::move(tree_);
  }

 private:
  void process(const WorkItem& item, std::vector<WorkItem>& stack) {
    double mass = 0.0, sum = 0.0;
    for (std::uint32_t pos = item.begin; pos < item.end; ++pos) {
      const std::uint32_t i = idx_[pos];
      const double c = counts_[i];
      mass += c;
      sum += c * y_[i];
    }
    if (mass < min_mass_) {
      make_leaf(item);
      return;
    }

    SplitChoice best;
    sampler_(tree_index_, static_cast<std::uint64_t>(item.node), k_, mtry_, candidates_);
    for (int j : candidates_) evaluate_candidate(j, item, mass, sum, best);
    if (!best.valid()) {
      // Every sampled covariate was constant in-node; retry over the full
      // covariate set before declaring the node pure.
      for (std::size_t j = 0; j < k_; ++j)
        evaluate_candidate(static_cast<int>(j), item, mass, sum, best);
    }
    if (!best.valid()) {
      make_leaf(item);
      return;
    }

    double decrease = best.gain - sum * sum / mass;
    if (decrease < 0.0) decrease = 0.0;
    tree_.rss_decrease[static_cast<std::size_t>(best.var)] += decrease;

    // Stable partition keeps each side in ascending training-index order.
    const double* col = column(best.var);
    left_buf_.clear();
    right_buf_.clear();
    for (std::uint32_t pos = item.begin; pos < item.end; ++pos) {
      const std::uint32_t i = idx_[pos];
      (col[i] <= best.threshold ? left_buf_ : right_buf_).push_back(i);
    }
    const std::uint32_t mid = item.begin + static_cast<std::uint32_t>(left_buf_.size());
    std::copy(left_buf_.begin(), left_buf_.end(), idx_.begin() + item.begin);
    std::copy(right_buf_.begin(), right_buf_.end(), idx_.begin() + mid);

    const auto left_id = static_cast<std::int32_t>(tree_.nodes.size());
    const auto right_id = left_id + 1;
    TreeNode& parent = tree_.nodes[static_cast<std::size_t>(item.node)];
    parent.split_var = best.var;
    parent.threshold = best.threshold;
    parent.left = left_id;
    parent.right = right_id;
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    stack.push_back({right_id, mid, item.end});
    stack.push_back({left_id, item.begin, mid});
  }

  void evaluate_candidate(int j, const WorkItem& item, double mass, double sum,
                          SplitChoice& best) {
    const double* col = column(j);
    sorted_.clear();
    for (std::uint32_t pos = item.begin; pos < item.end; ++pos) {
      const std::uint32_t i = idx_[pos];
      sorted_.emplace_back(col[i], i);
    }
    std::sort(sorted_.begin(), sorted_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (sorted_.front().first == sorted_.back().first) return;

    double wl = 0.0, sl = 0.0;
    for (std::size_t p = 0; p + 1 < sorted_.size(); ++p) {
      const auto [v, i] = sorted_[p];
      const double c = counts_[i];
      wl += c;
      sl += c * y_[i];
      const double vn = sorted_[p + 1].first;
      if (v < vn) {
        const double wr = mass - wl;
        const double sr = sum - sl;
        const double gain = sl * sl / wl + sr * sr / wr;
        // Midpoint threshold; if it rounds up to vn the `<= s` rule would
        // pull the right group left, so fall back to the left value.
        double thr = v + 0.5 * (vn - v);
        if (!(thr < vn)) thr = v;
        best.consider(gain, j, thr);
      }
    }
  }

  void make_leaf(const WorkItem& item) {
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(item.node)];
    node.split_var = -1;
    node.member_begin = static_cast<std::uint32_t>(tree_.member_index.size());
    double mass = 0.0, sum = 0.0;
    for (std::uint32_t pos = item.begin; pos < item.end; ++pos) {
      const std::uint32_t i = idx_[pos];
      const double c = counts_[i];
      tree_.member_index.push_back(i);
      tree_.member_count.push_back(counts_[i]);
      mass += c;
      sum += c * y_[i];
    }
    node.member_end = static_cast<std::uint32_t>(tree_.member_index.size());
    node.leaf_mean = sum / mass;
  }

  const double* column(int j) const { return columns_.data() + static_cast<std::size_t>(j) * n_rows_; }

  const std::vector<double>& columns_;
  const std::vector<double>& y_;
  std::size_t n_rows_, k_;
  int mtry_;
  double min_mass_;
  std::uint64_t tree_index_;
  const CovariateSampler& sampler_;

  std::vector<std::uint32_t> counts_;
  std::vector<std::uint32_t> idx_;
  std::vector<std::uint32_t> left_buf_, right_buf_;
  std::vector<std::pair<double, std::uint32_t>> sorted_;
  std::vector<int> candidates_;
  Tree tree_;
};

CovariateSampler make_default_sampler(std::uint64_t forest_seed) {
  return [forest_seed](std::uint64_t tree, std::uint64_t node, std::size_t k, int mtry,
                       std::vector<int>& out) {
    out.resize(k);
    std::iota(out.begin(), out.end(), 0);
    Rng rng(derive_seed(forest_seed, "node-covariates", tree, node));
    for (int i = 0; i < mtry; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) + rng.uniform_int(k - static_cast<std::size_t>(i));
      std::swap(out[static_cast<std::size_t>(i)], out[j]);
    }
    out.resize(static_cast<std::size_t>(mtry));
  };
}

ForestConfig resolve_config(ForestConfig config, std::size_t k) {
  if (config.tree_count < 1) throw ConfigError("tree_count must be >= 1");
  if (config.min_node_size < 1) throw ConfigError("min_node_size must be >= 1");
  if (config.mtry == 0) config.mtry = std::max<int>(1, static_cast<int>(k) / 3);
  if (config.mtry < 1 || config.mtry > static_cast<int>(k))
    throw ConfigError("mtry must be in [1, k]");
  return config;
}

}  // namespace

std::vector<std::uint32_t> Forest::bootstrap_counts(std::size_t b) const {
  const Tree& tree = trees[b];
  std::vector<std::uint32_t> counts(train_rows, 0);
  for (std::size_t m = 0; m < tree.member_index.size(); ++m)
    counts[tree.member_index[m]] += tree.member_count[m];
  return counts;
}

void Forest::rebuild_inbag() {
  inbag_.assign(trees.size(), {});
  for (std::size_t b = 0; b < trees.size(); ++b) {
    auto& mask = inbag_[b];
    mask.assign(train_rows, 0);
    for (std::uint32_t t : trees[b].member_index) mask[t] = 1;
  }
}

void Forest::check_query(std::span<const double> query) const {
  if (query.size() != stat_names.size())
    throw DataError("query has " + std::to_string(query.size()) + " statistics, forest expects " +
                    std::to_string(stat_names.size()));
}

namespace {

Forest train_impl(const ReferenceTable& table, std::vector<double> responses,
                  const std::string& response_name, ForestConfig config, int threads,
                  const CovariateSampler& sampler) {
  const std::size_t n = table.rows();
  const std::size_t k = table.stat_count();
  if (n < 2) throw DataError("forest training requires N >= 2 rows");
  if (responses.size() != n) throw DataError("response length does not match table rows");
  for (double v : responses)
    if (!std::isfinite(v)) throw NumericError("non-finite response value");
  config = resolve_config(config, k);

  // Column-major copy of the statistics for cache-friendly split scans.
  std::vector<double> columns(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) columns[j * n + i] = table.stat(i, j);

  Forest forest;
  forest.config = config;
  forest.response_name = response_name;
  forest.stat_names = table.stat_names();
  forest.train_rows = static_cast<std::uint32_t>(n);
  forest.responses = std::move(responses);
  forest.trees.resize(static_cast<std::size_t>(config.tree_count));

  parallel_for(forest.trees.size(), threads, [&](std::size_t b) {
    TreeBuilder builder(columns, forest.responses, n, k, config.mtry, config.min_node_size,
                        derive_seed(config.seed, "bootstrap", b), b, sampler);
    forest.trees[b] = builder.build();
  });
  forest.rebuild_inbag();
  return forest;
}

}  // namespace

Forest train_with_sampler(const ReferenceTable& table, const ResponseSpec& response,
                          ForestConfig config, int threads, const CovariateSampler& sampler) {
  return train_impl(table, response.evaluate(table), response.name(), config, threads, sampler);
}

Forest train(const ReferenceTable& table, const ResponseSpec& response, ForestConfig config,
             int threads) {
  return train_with_sampler(table, response, config, threads,
                            make_default_sampler(config.seed));
}

Forest train_on_responses(const ReferenceTable& table, std::vector<double> responses,
                          const std::string& response_name, ForestConfig config, int threads) {
  return train_impl(table, std::move(responses), response_name, config, threads,
                    make_default_sampler(config.seed));
}

std::int32_t assign_leaf(const Tree& tree, std::span<const double> query, std::size_t dim) {
  if (query.size() != dim)
    throw DataError("query has " + std::to_string(query.size()) + " statistics, tree expects " +
                    std::to_string(dim));
  return tree.walk(query);
}

double predict_mean(const Forest& forest, std::span<const double> query) {
  forest.check_query(query);
  double acc = 0.0;
  for (const Tree& tree : forest.trees)
    acc += tree.nodes[static_cast<std::size_t>(tree.walk(query))].leaf_mean;
  return acc / static_cast<double>(forest.trees.size());
}

}  // namespace abcrf
