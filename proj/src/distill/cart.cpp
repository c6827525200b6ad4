#include "skilltree/distill/cart.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "skilltree/env/dataset.hpp"
#include "skilltree/errors.hpp"

namespace skilltree::distill {

std::string labels_to_csv(const LabelledSet& set) {
  std::ostringstream out;
  for (int f = 0; f < set.states.cols; ++f) out << 's' << f << ',';
  out << "k\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (float v : set.states.row_span(static_cast<int>(i))) out << env::format_float(v) << ',';
    out << set.skills[i] + 1 << '\n';
  }
  return out.str();
}

LabelledSet labels_from_csv(const std::string& text, int num_skills) {
  require(num_skills >= 1, "labels: num_skills must be >= 1");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("labels CSV is empty");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "k") throw IoError("labels CSV: header must end with 'k'");
  const int s = static_cast<int>(header.size()) - 1;
  for (int f = 0; f < s; ++f)
    if (header[static_cast<size_t>(f)] != "s" + std::to_string(f)) throw IoError("labels CSV: unexpected header");

  std::vector<float> values;
  LabelledSet set;
  set.num_skills = num_skills;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != s + 1) throw IoError("labels CSV: wrong column count in '" + line + "'");
    try {
      for (int f = 0; f < s; ++f) values.push_back(std::stof(cells[static_cast<size_t>(f)]));
      const int k = std::stoi(cells.back());
      if (k < 1 || k > num_skills) throw IoError("labels CSV: skill index out of range in '" + line + "'");
      set.skills.push_back(k - 1);
    } catch (const std::logic_error&) {
      throw IoError("labels CSV: malformed number in '" + line + "'");
    }
  }
  set.states = diffcore::Tensor(static_cast<int>(set.skills.size()), s, std::move(values));
  return set;
}

double gini_mass(std::span<const int> class_counts) {
  double n = 0.0;
  double sq = 0.0;
  for (int c : class_counts) {
    n += c;
    sq += static_cast<double>(c) * c;
  }
  return n > 0.0 ? n - sq / n : 0.0;
}

namespace {

std::vector<int> class_counts(const LabelledSet& set, std::span<const int> rows) {
  std::vector<int> counts(static_cast<size_t>(set.num_skills), 0);
  for (int r : rows) ++counts[static_cast<size_t>(set.skills[static_cast<size_t>(r)])];
  return counts;
}

int majority(std::span<const int> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

// Midpoint rounded to float so that thresholds survive a 9-digit text round
// trip. For adjacent floats the rounding can land on `a`; `b` still separates.
double midpoint(float a, float b) {
  const float t = static_cast<float>(0.5 * (static_cast<double>(a) + static_cast<double>(b)));
  return a < t ? t : b;
}

// Splits must beat the parent by more than rounding noise.
constexpr double kMinGain = 1e-9;

}  // namespace

Split best_split(const LabelledSet& set, std::span<const int> rows, int min_leaf) {
  require(min_leaf >= 1, "min_leaf must be >= 1");
  const auto total = class_counts(set, rows);
  const double parent = gini_mass(total);
  const int n = static_cast<int>(rows.size());
  Split best;
  best.impurity = parent - kMinGain;
  if (n < 2 * min_leaf) return {};

  std::vector<int> order(rows.begin(), rows.end());
  std::vector<int> left(total.size());
  std::vector<int> right(total.size());
  for (int f = 0; f < set.states.cols; ++f) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return set.states(a, f) < set.states(b, f); });
    std::fill(left.begin(), left.end(), 0);
    right = total;
    for (int i = 0; i + 1 < n; ++i) {
      const int k = set.skills[static_cast<size_t>(order[static_cast<size_t>(i)])];
      ++left[static_cast<size_t>(k)];
      --right[static_cast<size_t>(k)];
      const float a = set.states(order[static_cast<size_t>(i)], f);
      const float b = set.states(order[static_cast<size_t>(i) + 1], f);
      if (!(a < b)) continue;
      if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
      const double imp = gini_mass(left) + gini_mass(right);
      if (imp < best.impurity) {
        best.feature = f;
        best.threshold = midpoint(a, b);
        best.impurity = imp;
      }
    }
  }
  if (!best.valid()) return {};
  return best;
}

HardTree cart_fit(const LabelledSet& set, const CartSettings& settings) {
  require(set.size() > 0, "cart_fit: empty label set");
  require(settings.max_depth >= 0, "cart_fit: max_depth must be >= 0");
  require(settings.min_leaf >= 1, "cart_fit: min_leaf must be >= 1");
  require(set.num_skills >= 1 && static_cast<int>(set.states.rows) == static_cast<int>(set.size()),
          "cart_fit: malformed label set");
  for (int k : set.skills) require(k >= 0 && k < set.num_skills, "cart_fit: skill index out of range");

  std::vector<HardNode> nodes;
  // Preorder numbering, the same order the text form is read back in.
  std::function<int(std::vector<int>, int)> grow = [&](std::vector<int> rows, int depth) -> int {
    const int u = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const auto counts = class_counts(set, rows);
    nodes[static_cast<size_t>(u)].skill = majority(counts);
    nodes[static_cast<size_t>(u)].count = static_cast<int>(rows.size());
    if (depth >= settings.max_depth || gini_mass(counts) == 0.0) return u;
    const Split s = best_split(set, rows, settings.min_leaf);
    if (!s.valid()) return u;

    std::vector<int> lo;
    std::vector<int> hi;
    for (int r : rows) (static_cast<double>(set.states(r, s.feature)) < s.threshold ? lo : hi).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(lo), depth + 1);
    const int r = grow(std::move(hi), depth + 1);
    auto& node = nodes[static_cast<size_t>(u)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = l;
    node.right = r;
    return u;
  };
  std::vector<int> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  grow(std::move(all), 0);
  return HardTree(std::move(nodes));
}

double training_accuracy(const HardTree& tree, const LabelledSet& set) {
  require(set.size() > 0, "training_accuracy: empty label set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (tree.predict(set.states.row_span(static_cast<int>(i))) == set.skills[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(set.size());
}

}  // namespace skilltree::distill
