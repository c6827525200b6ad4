#pragma once

#include <span>
#include <vector>

#include "skilltree/diffcore/tensor.hpp"
#include "skilltree/distill/hard_tree.hpp"

namespace skilltree::distill {

/// State → skill pairs with where they came from.
struct LabelledSet {
  diffcore::Tensor states;  ///< N × S
  std::vector<int> skills;  ///< 0-based
  int num_skills = 0;
  std::string policy_id;    ///< content hash of the policy checkpoint, if known
  int cleaning_threshold = -1;

  std::size_t size() const noexcept { return skills.size(); }
};

/// Header `s0..s<S-1>,k` with 1-based k.
std::string labels_to_csv(const LabelledSet& set);
LabelledSet labels_from_csv(const std::string& text, int num_skills);

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  ///< weighted Gini of the two children, sum over samples
  bool valid() const noexcept { return feature >= 0; }
};

/// Sum over samples of Gini impurity, n - sum_c n_c^2 / n.
double gini_mass(std::span<const int> class_counts);

/// Best split of `rows` over every feature and every midpoint between
/// consecutive distinct sorted values (rounded to float), keeping both sides >= min_leaf. Ties go
/// to the smallest feature, then the smallest threshold. Returns an invalid
/// split when nothing reduces impurity.
Split best_split(const LabelledSet& set, std::span<const int> rows, int min_leaf);

struct CartSettings {
  int max_depth = 6;
  int min_leaf = 1;
};

/// Greedy top-down Gini tree; leaves predict the majority class (ties to the smallest index).
HardTree cart_fit(const LabelledSet& set, const CartSettings& settings);

/// Fraction of rows the tree classifies as labelled.
double training_accuracy(const HardTree& tree, const LabelledSet& set);

}  // namespace skilltree::distill
