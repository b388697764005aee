#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "abcrf/models.hpp"
#include "abcrf/reftable.hpp"
#include "abcrf/rng.hpp"
#include "test_util.hpp"

using namespace abcrf;

namespace {

ReferenceTable toy_table() {
  return ReferenceTable({"a", "b"}, {"x", "y", "z"}, {1.0, 2.0, 3.0, 4.0},
                        {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
}

}  // namespace

TEST_CASE("csv round-trip is exact on a toy table") {
  testutil::TempDir tmp("reftable");
  const ReferenceTable t = toy_table();
  write_csv(t, tmp.path("t.csv"));
  CHECK(read_csv(tmp.path("t.csv")) == t);
}

TEST_CASE("csv round-trip is exact for 1000 random doubles including subnormals") {
  testutil::TempDir tmp("reftable_rand");
  Rng rng(77);
  std::vector<double> values;
  for (int i = 0; i < 1000; ++i) {
    double v;
    switch (i % 5) {
      case 0: v = rng.normal() * std::pow(10.0, (rng.uniform01() - 0.5) * 600.0); break;
      case 1: v = 5e-324 * static_cast<double>(1 + rng.uniform_int(1000)); break;  // subnormal
      case 2: v = rng.normal(); break;
      case 3: v = -rng.uniform01() * 1e308; break;
      default: v = rng.uniform01() * 1e-308; break;
    }
    values.push_back(v);
  }
  const ReferenceTable t({}, {"v"}, {}, values);
  write_csv(t, tmp.path("vals.csv"));
  const ReferenceTable back = read_csv(tmp.path("vals.csv"));
  for (std::size_t i = 0; i < values.size(); ++i) CHECK(back.stat(i, 0) == values[i]);
}

TEST_CASE("load errors name the offending row and column") {
  testutil::TempDir tmp("reftable_err");
  auto write_file = [&](const std::string& name, const std::string& body) {
    std::ofstream f(tmp.path(name));
    f << body;
    return tmp.path(name);
  };
  CHECK_THROWS_WITH_AS(read_csv(write_file("nan.csv", "stat:x,stat:y\n1,nan\n")),
                       doctest::Contains("row 1, column 'y'"), DataError);
  CHECK_THROWS_WITH_AS(read_csv(write_file("ragged.csv", "stat:x,stat:y\n1,2\n3\n")),
                       doctest::Contains("row 2"), DataError);
  CHECK_THROWS_WITH_AS(read_csv(write_file("cell.csv", "stat:x\nhello\n")),
                       doctest::Contains("column 'x'"), DataError);
  CHECK_THROWS_AS(read_csv(write_file("header.csv", "x,y\n1,2\n")), DataError);
  CHECK_THROWS_AS(read_csv(write_file("order.csv", "stat:x,param:a\n1,2\n")), DataError);
  CHECK_THROWS_AS(read_csv(write_file("empty.csv", "")), DataError);
}

TEST_CASE("normal-toy table survives a csv round-trip") {
  testutil::TempDir tmp("reftable_toy");
  const NormalToyModel model(10, 50, 11);
  const ReferenceTable t = simulate_normal_toy(model, 2000);
  write_csv(t, tmp.path("toy.csv"));
  CHECK(read_csv(tmp.path("toy.csv")) == t);
}

TEST_CASE("split partitions the rows deterministically") {
  const ReferenceTable t = testutil::random_table(10, 3, 5);
  const SplitResult s = split(t, 3, 42);
  CHECK(s.train.rows() == 7);
  CHECK(s.test.rows() == 3);

  // Union of row fingerprints equals the original multiset.
  auto key = [](const ReferenceTable& tab, std::size_t i) {
    return std::make_pair(tab.param(i, 0), tab.stat(i, 0));
  };
  std::multiset<std::pair<double, double>> original, pieces;
  for (std::size_t i = 0; i < t.rows(); ++i) original.insert(key(t, i));
  for (std::size_t i = 0; i < s.train.rows(); ++i) pieces.insert(key(s.train, i));
  for (std::size_t i = 0; i < s.test.rows(); ++i) pieces.insert(key(s.test, i));
  CHECK(original == pieces);

  const SplitResult again = split(t, 3, 42);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK_FALSE(split(t, 3, 43).test == s.test);

  CHECK_THROWS_AS(split(t, 0, 1), ConfigError);
  CHECK_THROWS_AS(split(t, 10, 1), ConfigError);
}

TEST_CASE("split handles benchmark-scale partitions") {
  const ReferenceTable t = testutil::random_table(20000, 2, 9);
  const SplitResult s = split(t, 1000, 3);
  CHECK(s.train.rows() == 19000);
  CHECK(s.test.rows() == 1000);
}

TEST_CASE("add_noise_columns appends fresh uniform columns") {
  const NormalToyModel model(10, 50, 21);
  const ReferenceTable t = simulate_normal_toy(model, 50);
  const ReferenceTable with = add_noise_columns(t, 20, 7);
  CHECK(with.stat_count() == 81);
  CHECK(with.stat_names()[61] == "noise51");
  CHECK(with.stat_names()[80] == "noise70");
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.stat_count(); ++j) CHECK(with.stat(i, j) == t.stat(i, j));
  const ReferenceTable other = add_noise_columns(t, 20, 8);
  bool differs = false;
  for (std::size_t i = 0; i < t.rows() && !differs; ++i)
    differs = other.stat(i, 61) != with.stat(i, 61);
  CHECK(differs);
  for (std::size_t i = 0; i < with.rows(); ++i)
    for (std::size_t j = 61; j < 81; ++j) {
      CHECK(with.stat(i, j) >= 0.0);
      CHECK(with.stat(i, j) < 1.0);
    }
}

TEST_CASE("table construction validates names and values") {
  CHECK_THROWS_AS(ReferenceTable({"a", "a"}, {"x"}, {1, 2}, {1}), DataError);
  CHECK_THROWS_AS(ReferenceTable({"a"}, {"x", "x"}, {1}, {1, 2}), DataError);
  CHECK_THROWS_AS(ReferenceTable({"a"}, {"x"}, {std::nan("")}, {1.0}), DataError);
  CHECK_THROWS_AS(ReferenceTable({}, {"x"}, {}, {}), DataError);
}
