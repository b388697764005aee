#include "abcrf/qrf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace abcrf {

double WeightVector::sum() const {
  double s = 0.0;
  for (double w : weight) s += w;
  return s;
}

WeightVector weights(const Forest& forest, std::span<const double> query) {
  forest.check_query(query);
  std::vector<double> acc(forest.train_rows, 0.0);
  for (const Tree& tree : forest.trees) {
    const std::int32_t leaf = tree.walk(query);
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(leaf)];
    const auto mass = static_cast<double>(tree.leaf_mass(leaf));
    for (std::uint32_t m = nd.member_begin; m < nd.member_end; ++m)
      acc[tree.member_index[m]] += static_cast<double>(tree.member_count[m]) / mass;
  }
  const auto b = static_cast<double>(forest.trees.size());
  WeightVector out;
  for (std::uint32_t t = 0; t < forest.train_rows; ++t) {
    if (acc[t] > 0.0) {
      out.index.push_back(t);
      out.weight.push_back(acc[t] / b);
    }
  }
  return out;
}

double expectation(const WeightVector& w, std::span<const double> responses) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.index.size(); ++i) s += w.weight[i] * responses[w.index[i]];
  return s;
}

namespace {

// Sorted (value, weight) support of a weight vector.
std::vector<std::pair<double, double>> sorted_support(const WeightVector& w,
                                                      std::span<const double> responses) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(w.index.size());
  for (std::size_t i = 0; i < w.index.size(); ++i)
    pairs.emplace_back(responses[w.index[i]], w.weight[i]);
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return pairs;
}

double quantile_of_sorted(const std::vector<std::pair<double, double>>& pairs, double total,
                          double alpha) {
  if (pairs.empty()) throw DataError("quantile of empty sample");
  if (!(alpha > 0.0) || alpha > 1.0)
    throw ConfigError("quantile requires alpha in (0, 1]");
  const double target = alpha * total;
  double cum = 0.0;
  std::size_t i = 0;
  while (i < pairs.size()) {
    // Ties share one cdf step: accumulate the whole equal-value run.
    const double v = pairs[i].first;
    while (i < pairs.size() && pairs[i].first == v) cum += pairs[i++].second;
    if (cum >= target) return v;
  }
  return pairs.back().first;  // cum fell short of total by rounding
}

}  // namespace

double cdf(const WeightVector& w, std::span<const double> responses, double at) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.index.size(); ++i)
    if (responses[w.index[i]] <= at) s += w.weight[i];
  return s;
}

double quantile(const WeightVector& w, std::span<const double> responses, double alpha) {
  return quantile_of_sorted(sorted_support(w, responses), 1.0, alpha);
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double alpha) {
  if (values.size() != weights.size()) throw DataError("values/weights length mismatch");
  std::vector<std::pair<double, double>> pairs;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] < 0.0) throw DataError("negative weight in weighted_quantile");
    if (weights[i] > 0.0) pairs.emplace_back(values[i], weights[i]);
    total += weights[i];
  }
  if (!(total > 0.0)) throw DataError("weighted_quantile requires positive total weight");
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return quantile_of_sorted(pairs, total, alpha);
}

std::vector<std::pair<double, double>> weighted_sample(const WeightVector& w,
                                                       std::span<const double> responses) {
  return sorted_support(w, responses);
}

void write_weighted_sample_csv(const WeightVector& w, std::span<const double> responses,
                               const std::string& path) {
  const auto pairs = weighted_sample(w, responses);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << "response,weight\n";
  char buf[40];
  for (const auto& [value, weight] : pairs) {
    auto r1 = std::to_chars(buf, buf + sizeof(buf), value);
    f.write(buf, r1.ptr - buf);
    f << ',';
    auto r2 = std::to_chars(buf, buf + sizeof(buf), weight);
    f.write(buf, r2.ptr - buf);
    f << '\n';
  }
}

}  // namespace abcrf
