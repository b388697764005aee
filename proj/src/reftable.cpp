#include "abcrf/reftable.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "abcrf/rng.hpp"

namespace abcrf {

namespace {

void check_unique(const std::vector<std::string>& names, const char* group) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw DataError(std::string(group) + " column with empty name");
    if (!seen.insert(n).second)
      throw DataError(std::string("duplicate ") + group + " column '" + n + "'");
  }
}

std::size_t find_name(const std::vector<std::string>& names, const std::string& name,
                      const char* group) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw DataError(std::string("unknown ") + group + " column '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void check_finite(const std::vector<double>& values, const std::vector<std::string>& names,
                  std::size_t cols, const char* group) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("non-finite " + std::string(group) + " value at row " +
                      std::to_string(i / cols + 1) + ", column '" + names[i % cols] + "'");
    }
  }
}

void append_double(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

ReferenceTable::ReferenceTable(std::vector<std::string> param_names,
                               std::vector<std::string> stat_names,
                               std::vector<double> params, std::vector<double> stats)
    : param_names_(std::move(param_names)),
      stat_names_(std::move(stat_names)),
      params_(std::move(params)),
      stats_(std::move(stats)) {
  check_unique(param_names_, "param");
  check_unique(stat_names_, "stat");
  if (stat_names_.empty()) throw DataError("table requires at least one statistic column");
  if (stats_.size() % stat_names_.size() != 0)
    throw DataError("stat matrix size does not match column count");
  rows_ = stats_.size() / stat_names_.size();
  if (rows_ == 0) throw DataError("table requires at least one row");
  const std::size_t expected_params = rows_ * param_names_.size();
  if (params_.size() != expected_params)
    throw DataError("param matrix size does not match row count");
  check_finite(params_, param_names_, std::max<std::size_t>(param_names_.size(), 1), "param");
  check_finite(stats_, stat_names_, stat_names_.size(), "stat");
}

std::size_t ReferenceTable::param_index(const std::string& name) const {
  return find_name(param_names_, name, "param");
}

std::size_t ReferenceTable::stat_index(const std::string& name) const {
  return find_name(stat_names_, name, "stat");
}

std::vector<double> ReferenceTable::param_column(std::size_t j) const {
  std::vector<double> col(rows_);
  for (std::size_t i = 0; i < rows_; ++i) col[i] = param(i, j);
  return col;
}

std::vector<double> ReferenceTable::stat_column(std::size_t j) const {
  std::vector<double> col(rows_);
  for (std::size_t i = 0; i < rows_; ++i) col[i] = stat(i, j);
  return col;
}

bool ReferenceTable::operator==(const ReferenceTable& other) const {
  return param_names_ == other.param_names_ && stat_names_ == other.stat_names_ &&
         params_ == other.params_ && stats_ == other.stats_;
}

void write_csv(const ReferenceTable& table, const std::string& path) {
  std::string out;
  out.reserve(table.rows() * (table.param_count() + table.stat_count()) * 20);
  bool first = true;
  for (const auto& n : table.param_names()) {
    if (!first) out += ',';
    out += "param:";
    out += n;
    first = false;
  }
  for (const auto& n : table.stat_names()) {
    if (!first) out += ',';
    out += "stat:";
    out += n;
    first = false;
  }
  out += '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < table.param_count(); ++j) {
      if (j) out += ',';
      append_double(out, table.param(i, j));
    }
    for (std::size_t j = 0; j < table.stat_count(); ++j) {
      if (j || table.param_count()) out += ',';
      append_double(out, table.stat(i, j));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed for '" + path + "'");
}

ReferenceTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(f, line)) throw DataError("empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> param_names, stat_names;
  {
    std::stringstream header(line);
    std::string cell;
    bool seen_stat = false;
    while (std::getline(header, cell, ',')) {
      if (cell.rfind("param:", 0) == 0) {
        if (seen_stat) throw DataError("malformed header: param column after stat column");
        param_names.push_back(cell.substr(6));
      } else if (cell.rfind("stat:", 0) == 0) {
        seen_stat = true;
        stat_names.push_back(cell.substr(5));
      } else {
        throw DataError("malformed header cell '" + cell + "' (expect param:/stat: prefix)");
      }
    }
  }
  const std::size_t p = param_names.size();
  const std::size_t k = stat_names.size();
  if (k == 0) throw DataError("header declares no stat columns");

  std::vector<double> params, stats;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const char* ptr = line.data();
    const char* end = ptr + line.size();
    std::size_t col = 0;
    while (true) {
      const std::string& name = col < p ? param_names[col] : stat_names[col - p];
      if (col >= p + k)
        throw DataError("row " + std::to_string(row) + " has more than " +
                        std::to_string(p + k) + " cells");
      double value = 0;
      auto res = std::from_chars(ptr, end, value);
      const char* stop = res.ptr;
      if (res.ec != std::errc() || (stop != end && *stop != ','))
        throw DataError("non-numeric cell at row " + std::to_string(row) + ", column '" +
                        name + "'");
      if (!std::isfinite(value))
        throw DataError("non-finite cell at row " + std::to_string(row) + ", column '" +
                        name + "'");
      (col < p ? params : stats).push_back(value);
      ++col;
      if (stop == end) break;
      ptr = stop + 1;
      if (ptr == end)
        throw DataError("row " + std::to_string(row) + " ends with an empty cell");
    }
    if (col != p + k)
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(col) +
                      " cells, expected " + std::to_string(p + k));
  }
  if (row == 0) throw DataError("file '" + path + "' has a header but no rows");
  return ReferenceTable(std::move(param_names), std::move(stat_names), std::move(params),
                        std::move(stats));
}

SplitResult split(const ReferenceTable& table, std::size_t test_count, std::uint64_t seed) {
  const std::size_t n = table.rows();
  if (test_count == 0 || test_count >= n)
    throw ConfigError("test_count must be in (0, N); got " + std::to_string(test_count) +
                      " with N=" + std::to_string(n));

  // Partial Fisher-Yates: the first test_count entries of the shuffle name
  // the test rows; both partitions keep the source row order.
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = 0; i < test_count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> in_test(n, false);
  for (std::size_t i = 0; i < test_count; ++i) in_test[order[i]] = true;

  const std::size_t p = table.param_count();
  const std::size_t k = table.stat_count();
  std::vector<double> train_params, train_stats, test_params, test_stats;
  train_params.reserve((n - test_count) * p);
  train_stats.reserve((n - test_count) * k);
  test_params.reserve(test_count * p);
  test_stats.reserve(test_count * k);
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst_p = in_test[i] ? test_params : train_params;
    auto& dst_s = in_test[i] ? test_stats : train_stats;
    auto pr = table.param_row(i);
    auto sr = table.stat_row(i);
    dst_p.insert(dst_p.end(), pr.begin(), pr.end());
    dst_s.insert(dst_s.end(), sr.begin(), sr.end());
  }
  return {ReferenceTable(table.param_names(), table.stat_names(), std::move(train_params),
                         std::move(train_stats)),
          ReferenceTable(table.param_names(), table.stat_names(), std::move(test_params),
                         std::move(test_stats))};
}

ReferenceTable add_noise_columns(const ReferenceTable& table, std::size_t count,
                                 std::uint64_t seed) {
  if (count == 0) throw ConfigError("add_noise_columns requires count >= 1");
  std::size_t existing_noise = 0;
  for (const auto& name : table.stat_names()) {
    if (name.rfind("noise", 0) == 0 &&
        name.find_first_not_of("0123456789", 5) == std::string::npos && name.size() > 5) {
      ++existing_noise;
    }
  }
  std::vector<std::string> stat_names = table.stat_names();
  for (std::size_t j = 0; j < count; ++j)
    stat_names.push_back("noise" + std::to_string(existing_noise + j + 1));

  const std::size_t n = table.rows();
  const std::size_t k = table.stat_count();
  std::vector<double> stats;
  stats.reserve(n * (k + count));
  for (std::size_t i = 0; i < n; ++i) {
    auto sr = table.stat_row(i);
    stats.insert(stats.end(), sr.begin(), sr.end());
    Rng rng(derive_seed(seed, "added-noise", i));
    for (std::size_t j = 0; j < count; ++j) stats.push_back(rng.uniform01());
  }
  std::vector<double> params(table.rows() * table.param_count());
  for (std::size_t i = 0; i < n; ++i) {
    auto pr = table.param_row(i);
    std::copy(pr.begin(), pr.end(), params.begin() + static_cast<std::ptrdiff_t>(i * pr.size()));
  }
  return ReferenceTable(table.param_names(), std::move(stat_names), std::move(params),
                        std::move(stats));
}

}  // namespace abcrf
