#pragma once

// Shared helpers for the test suites: scratch directories, small random
// tables, and the brute-force weight oracle used to pin down the forest
// weight computation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

#include "abcrf/forest.hpp"
#include "abcrf/reftable.hpp"
#include "abcrf/rng.hpp"

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("abcrf_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

// Small table with uniform statistics and a response that mixes signal and
// noise: param0 = x0 + 0.1 * eps.
inline abcrf::ReferenceTable random_table(std::size_t rows, std::size_t stats,
                                          std::uint64_t seed) {
  abcrf::Rng rng(seed);
  std::vector<double> s(rows * stats), p(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < stats; ++j) s[i * stats + j] = rng.uniform01();
    p[i] = s[i * stats] + 0.1 * rng.normal();
  }
  std::vector<std::string> stat_names;
  for (std::size_t j = 0; j < stats; ++j) stat_names.push_back("s" + std::to_string(j));
  return abcrf::ReferenceTable({"p0"}, stat_names, std::move(p), std::move(s));
}

inline std::vector<double> random_query(std::size_t stats, abcrf::Rng& rng) {
  std::vector<double> q(stats);
  for (double& v : q) v = rng.uniform01();
  return q;
}

// Brute-force weight oracle: re-walks every tree for the query and for every
// training record, recounts leaf multiplicities, and accumulates in the
// prescribed order (per record, trees ascending; final division by B).
inline std::vector<double> brute_force_weights(const abcrf::Forest& forest,
                                               const abcrf::ReferenceTable& table,
                                               std::span<const double> query) {
  const std::size_t n = table.rows();
  std::vector<double> acc(n, 0.0);
  for (std::size_t b = 0; b < forest.trees.size(); ++b) {
    const abcrf::Tree& tree = forest.trees[b];
    auto walk = [&](std::span<const double> x) {
      std::int32_t id = 0;
      while (tree.nodes[id].split_var >= 0) {
        const auto& nd = tree.nodes[id];
        id = x[nd.split_var] <= nd.threshold ? nd.left : nd.right;
      }
      return id;
    };
    const std::int32_t query_leaf = walk(query);
    const std::vector<std::uint32_t> counts = forest.bootstrap_counts(b);
    std::uint64_t mass = 0;
    std::vector<bool> member(n, false);
    for (std::uint32_t t = 0; t < n; ++t) {
      if (counts[t] == 0) continue;
      if (walk(table.stat_row(t)) == query_leaf) {
        member[t] = true;
        mass += counts[t];
      }
    }
    for (std::uint32_t t = 0; t < n; ++t)
      if (member[t]) acc[t] += static_cast<double>(counts[t]) / static_cast<double>(mass);
  }
  for (double& v : acc) v /= static_cast<double>(forest.trees.size());
  return acc;
}

}  // namespace testutil
