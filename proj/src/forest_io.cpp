#include <fstream>
#include <nlohmann/json.hpp>

#include "abcrf/forest.hpp"

namespace abcrf {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "abcrf-forest";
constexpr int kVersion = 1;

json tree_to_json(const Tree& tree) {
  json t;
  const std::size_t n = tree.nodes.size();
  std::vector<std::int32_t> var(n), left(n), right(n);
  std::vector<double> thr(n), mean(n);
  std::vector<std::uint32_t> mbegin(n), mend(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TreeNode& nd = tree.nodes[i];
    var[i] = nd.split_var;
    thr[i] = nd.threshold;
    left[i] = nd.left;
    right[i] = nd.right;
    mean[i] = nd.leaf_mean;
    mbegin[i] = nd.member_begin;
    mend[i] = nd.member_end;
  }
  t["var"] = var;
  t["thr"] = thr;
  t["left"] = left;
  t["right"] = right;
  t["mean"] = mean;
  t["member_begin"] = mbegin;
  t["member_end"] = mend;
  t["member_index"] = tree.member_index;
  t["member_count"] = tree.member_count;
  t["rss_decrease"] = tree.rss_decrease;
  return t;
}

Tree tree_from_json(const json& t) {
  Tree tree;
  const auto& var = t.at("var");
  const auto& thr = t.at("thr");
  const auto& left = t.at("left");
  const auto& right = t.at("right");
  const auto& mean = t.at("mean");
  const auto& mbegin = t.at("member_begin");
  const auto& mend = t.at("member_end");
  const std::size_t n = var.size();
  if (thr.size() != n || left.size() != n || right.size() != n || mean.size() != n ||
      mbegin.size() != n || mend.size() != n)
    throw DataError("forest file: inconsistent tree node arrays");
  tree.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& nd = tree.nodes[i];
    nd.split_var = var[i].get<std::int32_t>();
    nd.threshold = thr[i].get<double>();
    nd.left = left[i].get<std::int32_t>();
    nd.right = right[i].get<std::int32_t>();
    nd.leaf_mean = mean[i].get<double>();
    nd.member_begin = mbegin[i].get<std::uint32_t>();
    nd.member_end = mend[i].get<std::uint32_t>();
  }
  tree.member_index = t.at("member_index").get<std::vector<std::uint32_t>>();
  tree.member_count = t.at("member_count").get<std::vector<std::uint32_t>>();
  tree.rss_decrease = t.at("rss_decrease").get<std::vector<double>>();
  if (tree.member_index.size() != tree.member_count.size())
    throw DataError("forest file: member arrays length mismatch");
  return tree;
}

}  // namespace

void write_forest_json(const Forest& forest, const std::string& path) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = {{"tree_count", forest.config.tree_count},
                 {"mtry", forest.config.mtry},
                 {"min_node_size", forest.config.min_node_size},
                 {"seed", forest.config.seed}};
  j["response"] = forest.response_name;
  j["stat_names"] = forest.stat_names;
  j["train_rows"] = forest.train_rows;
  j["responses"] = forest.responses;
  json trees = json::array();
  for (const Tree& tree : forest.trees) trees.push_back(tree_to_json(tree));
  j["trees"] = std::move(trees);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << j.dump();
  f << '\n';
  if (!f) throw DataError("write failed for '" + path + "'");
}

Forest read_forest_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for reading");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError("forest file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw DataError("forest file '" + path + "' has unknown format");
    if (j.at("version").get<int>() != kVersion)
      throw DataError("forest file '" + path + "' has unsupported version");
    Forest forest;
    const auto& cfg = j.at("config");
    forest.config.tree_count = cfg.at("tree_count").get<int>();
    forest.config.mtry = cfg.at("mtry").get<int>();
    forest.config.min_node_size = cfg.at("min_node_size").get<int>();
    forest.config.seed = cfg.at("seed").get<std::uint64_t>();
    forest.response_name = j.at("response").get<std::string>();
    forest.stat_names = j.at("stat_names").get<std::vector<std::string>>();
    forest.train_rows = j.at("train_rows").get<std::uint32_t>();
    forest.responses = j.at("responses").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) forest.trees.push_back(tree_from_json(t));
    if (forest.trees.size() != static_cast<std::size_t>(forest.config.tree_count))
      throw DataError("forest file: tree count does not match config");
    if (forest.responses.size() != forest.train_rows)
      throw DataError("forest file: responses length does not match train_rows");
    forest.rebuild_inbag();
    return forest;
  } catch (const json::exception& e) {
    throw DataError("forest file '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace abcrf
