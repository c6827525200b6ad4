#include "skilltree/distill/hard_tree.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "skilltree/env/dataset.hpp"
#include "skilltree/errors.hpp"

namespace skilltree::distill {

HardTree::HardTree(std::vector<HardNode> nodes) : nodes_(std::move(nodes)) {
  require(!nodes_.empty(), "hard tree needs at least one node");
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> parents(static_cast<size_t>(n), 0);
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    require(node.left > 0 && node.left < n && node.right > 0 && node.right < n, "hard tree child index out of range");
    ++parents[static_cast<size_t>(node.left)];
    ++parents[static_cast<size_t>(node.right)];
  }
  for (int i = 1; i < n; ++i) require(parents[static_cast<size_t>(i)] == 1, "hard tree nodes must form a tree");
}

int HardTree::leaf_index(std::span<const float> x) const {
  require(!nodes_.empty(), "empty hard tree");
  int u = 0;
  while (!nodes_[static_cast<size_t>(u)].is_leaf()) {
    const auto& node = nodes_[static_cast<size_t>(u)];
    require(node.feature < static_cast<int>(x.size()), "state has fewer features than the tree uses");
    u = static_cast<double>(x[static_cast<size_t>(node.feature)]) < node.threshold ? node.left : node.right;
  }
  return u;
}

int HardTree::predict(std::span<const float> x) const { return nodes_[static_cast<size_t>(leaf_index(x))].skill; }

int HardTree::depth() const {
  std::function<int(int)> rec = [&](int u) -> int {
    const auto& node = nodes_[static_cast<size_t>(u)];
    return node.is_leaf() ? 0 : 1 + std::max(rec(node.left), rec(node.right));
  };
  return nodes_.empty() ? 0 : rec(0);
}

int HardTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const HardNode& n) { return n.is_leaf(); }));
}

std::vector<int> HardTree::split_features() const {
  std::set<int> used;
  for (const auto& n : nodes_)
    if (!n.is_leaf()) used.insert(n.feature);
  return {used.begin(), used.end()};
}

std::string HardTree::to_text(std::span<const std::string> names) const {
  std::ostringstream out;
  std::function<void(int, int)> rec = [&](int u, int level) {
    const auto& node = nodes_[static_cast<size_t>(u)];
    out << std::string(static_cast<size_t>(2 * level), ' ');
    if (node.is_leaf()) {
      out << "leaf " << node.skill + 1 << ' ' << node.count << '\n';
      return;
    }
    if (names.empty()) {
      out << 's' << node.feature;
    } else {
      require(node.feature < static_cast<int>(names.size()), "feature name list is shorter than the tree needs");
      out << names[static_cast<size_t>(node.feature)];
    }
    out << " < " << env::format_float(node.threshold) << '\n';
    rec(node.left, level + 1);
    rec(node.right, level + 1);
  };
  if (!nodes_.empty()) rec(0, 0);
  return out.str();
}

namespace {

struct Line {
  int level = 0;
  std::string body;
};

int feature_index(const std::string& name, std::span<const std::string> names) {
  if (!names.empty()) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw IoError("hard tree text: unknown feature '" + name + "'");
    return static_cast<int>(it - names.begin());
  }
  try {
    std::size_t used = 0;
    if (name.size() < 2 || name[0] != 's') throw std::invalid_argument("feature");
    const int f = std::stoi(name.substr(1), &used);
    if (used != name.size() - 1 || f < 0) throw std::invalid_argument("feature");
    return f;
  } catch (const std::logic_error&) {
    throw IoError("hard tree text: bad feature name '" + name + "'");
  }
}

}  // namespace

HardTree HardTree::from_text(const std::string& text, std::span<const std::string> names) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    if (raw.find_first_not_of(' ') == std::string::npos) continue;
    const auto indent = raw.find_first_not_of(' ');
    if (indent % 2 != 0) throw IoError("hard tree text: odd indentation in '" + raw + "'");
    lines.push_back({static_cast<int>(indent / 2), raw.substr(indent)});
  }
  if (lines.empty()) throw IoError("hard tree text is empty");

  std::vector<HardNode> nodes;
  std::size_t pos = 0;
  std::function<int(int)> parse = [&](int level) -> int {
    if (pos >= lines.size()) throw IoError("hard tree text ends early");
    const Line& line = lines[pos++];
    if (line.level != level) throw IoError("hard tree text: unexpected indentation at '" + line.body + "'");
    std::istringstream ls(line.body);
    std::string head;
    ls >> head;
    const int u = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (head == "leaf") {
      int k = 0;
      int n = 0;
      if (!(ls >> k >> n) || k < 1 || n < 0) throw IoError("hard tree text: bad leaf '" + line.body + "'");
      nodes[static_cast<size_t>(u)].skill = k - 1;
      nodes[static_cast<size_t>(u)].count = n;
      return u;
    }
    std::string op;
    double threshold = 0.0;
    if (!(ls >> op >> threshold) || op != "<") throw IoError("hard tree text: bad split '" + line.body + "'");
    const int feature = feature_index(head, names);
    const int left = parse(level + 1);
    const int right = parse(level + 1);
    auto& node = nodes[static_cast<size_t>(u)];
    node.feature = feature;
    node.threshold = static_cast<float>(threshold);
    node.left = left;
    node.right = right;
    node.count = nodes[static_cast<size_t>(left)].count + nodes[static_cast<size_t>(right)].count;
    node.skill = nodes[static_cast<size_t>(left)].count >= nodes[static_cast<size_t>(right)].count
                     ? nodes[static_cast<size_t>(left)].skill
                     : nodes[static_cast<size_t>(right)].skill;
    return u;
  };
  parse(0);
  if (pos != lines.size()) throw IoError("hard tree text has trailing lines");
  return HardTree(std::move(nodes));
}

}  // namespace skilltree::distill
