#pragma once

#include <span>
#include <string>
#include <vector>

namespace skilltree::distill {

/// Axis-aligned threshold tree mapping a state to a skill index.
/// Internal skill indices are 0-based; the text form prints them 1-based.
struct HardNode {
  int feature = -1;  ///< -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int skill = 0;  ///< majority label of the samples that reached the node
  int count = 0;  ///< training samples that reached the node

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const HardNode&) const = default;
};

class HardTree {
 public:
  HardTree() = default;
  /// nodes[0] is the root; children referenced by index.
  explicit HardTree(std::vector<HardNode> nodes);

  /// Goes left when x[feature] < threshold.
  int predict(std::span<const float> x) const;
  int leaf_index(std::span<const float> x) const;

  const std::vector<HardNode>& nodes() const noexcept { return nodes_; }
  int depth() const;
  int leaf_count() const;
  /// Features used by at least one split, ascending.
  std::vector<int> split_features() const;

  /// One node per line, two spaces of indent per level: `<name> < <threshold>`
  /// for splits (left subtree first) and `leaf <k> <n>` with 1-based k.
  /// Features are named `s<f>` unless `names` is given.
  std::string to_text(std::span<const std::string> names = {}) const;
  /// Inverse of to_text for prediction purposes; inner-node majority labels are
  /// not part of the text and are rebuilt from the larger child. Thresholds are
  /// read back at float precision, which is where split search puts them.
  /// Throws IoError on malformed input.
  static HardTree from_text(const std::string& text, std::span<const std::string> names = {});

  bool operator==(const HardTree&) const = default;

 private:
  std::vector<HardNode> nodes_;
};

}  // namespace skilltree::distill
