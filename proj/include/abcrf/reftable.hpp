#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "abcrf/errors.hpp"

namespace abcrf {

// Training set of (parameter vector, summary statistics) pairs. Row order is
// meaningful: the row index is the training index t used everywhere else.
// Immutable after construction; safe to share across threads.
class ReferenceTable {
 public:
  ReferenceTable(std::vector<std::string> param_names,
                 std::vector<std::string> stat_names,
                 std::vector<double> params,  // row-major N x p
                 std::vector<double> stats);  // row-major N x k

  std::size_t rows() const { return rows_; }
  std::size_t param_count() const { return param_names_.size(); }
  std::size_t stat_count() const { return stat_names_.size(); }

  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<std::string>& stat_names() const { return stat_names_; }

  double param(std::size_t row, std::size_t j) const {
    return params_[row * param_names_.size() + j];
  }
  double stat(std::size_t row, std::size_t j) const {
    return stats_[row * stat_names_.size() + j];
  }

  std::span<const double> param_row(std::size_t row) const {
    return {params_.data() + row * param_names_.size(), param_names_.size()};
  }
  std::span<const double> stat_row(std::size_t row) const {
    return {stats_.data() + row * stat_names_.size(), stat_names_.size()};
  }

  // Index of a named column; throws DataError when absent.
  std::size_t param_index(const std::string& name) const;
  std::size_t stat_index(const std::string& name) const;

  std::vector<double> param_column(std::size_t j) const;
  std::vector<double> stat_column(std::size_t j) const;

  bool operator==(const ReferenceTable& other) const;

 private:
  std::vector<std::string> param_names_;
  std::vector<std::string> stat_names_;
  std::vector<double> params_;
  std::vector<double> stats_;
  std::size_t rows_ = 0;
};

// Observed summary vector, aligned to a table's stat_names.
struct QueryPoint {
  std::vector<double> stats;
};

// CSV interchange. Header row is `param:<name>,...,stat:<name>,...`; cells
// use shortest round-trip decimals so read(write(T)) == T exactly.
void write_csv(const ReferenceTable& table, const std::string& path);
ReferenceTable read_csv(const std::string& path);

struct SplitResult {
  ReferenceTable train;
  ReferenceTable test;
};

// Disjoint row partition with |test| == test_count; the partition assignment
// is seeded, within-partition row order follows the source table.
SplitResult split(const ReferenceTable& table, std::size_t test_count,
                  std::uint64_t seed);

// Appends `count` iid U[0,1] statistic columns. New columns are named
// noise<i>, numbering continues after any existing noise<i> columns.
ReferenceTable add_noise_columns(const ReferenceTable& table, std::size_t count,
                                 std::uint64_t seed);

}  // namespace abcrf
