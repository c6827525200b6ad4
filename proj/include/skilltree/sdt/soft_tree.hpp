#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skilltree/diffcore/graph.hpp"

namespace skilltree::sdt {

using diffcore::Graph;
using diffcore::Param;
using diffcore::Var;

enum class Branch : std::uint8_t { left, right };

struct PathStep {
  int node = 0;  ///< u = 2^layer - 1 + position
  Branch branch = Branch::left;
  double probability = 1.0;  ///< probability of the branch taken
  std::vector<float> weights;
  float bias = 0.0f;
};

/// Root-to-leaf route chosen greedily, one step per layer.
struct DecisionPath {
  std::vector<PathStep> steps;
  int leaf = 0;
  std::vector<double> leaf_distribution;

  double probability() const;
  /// argmax of the leaf distribution, ties to the smallest index.
  int skill() const;
};

struct TreeOutput {
  std::vector<double> distribution;        ///< mixture over K skills
  std::vector<double> path_probabilities;  ///< one per leaf, left-to-right
};

/// Complete binary soft decision tree with sigmoid-linear routing and
/// categorical leaves.
///
/// Node u = 2^i - 1 + j (layer i, position j) sends an input left with
/// probability sigmoid(w_u . x + b_u). A leaf's path probability is the product
/// of the branch probabilities on its root-to-leaf path; the output is the
/// path-weighted mixture of the leaves' softmax(logits).
class SoftTree {
 public:
  SoftTree() = default;
  /// Weights ~ uniform(+-1/sqrt(obs_dim)), zero biases, zero leaf logits.
  SoftTree(int depth, int obs_dim, int num_skills, std::uint64_t seed);

  int depth() const noexcept { return depth_; }
  int obs_dim() const noexcept { return obs_dim_; }
  int num_skills() const noexcept { return num_skills_; }
  int num_inner() const noexcept { return (1 << depth_) - 1; }
  int num_leaves() const noexcept { return 1 << depth_; }

  /// obs_dim × num_inner; column u is node u's weight vector.
  Param& weights() noexcept { return weights_; }
  const Param& weights() const noexcept { return weights_; }
  /// 1 × num_inner.
  Param& biases() noexcept { return biases_; }
  const Param& biases() const noexcept { return biases_; }
  /// num_leaves × num_skills.
  Param& leaf_logits() noexcept { return leaf_logits_; }
  const Param& leaf_logits() const noexcept { return leaf_logits_; }

  std::vector<Param*> param_ptrs() { return {&weights_, &biases_, &leaf_logits_}; }

  /// Evaluated in double precision.
  TreeOutput forward(std::span<const float> x) const;
  /// Left-branch probability at every inner node.
  std::vector<double> gate_probabilities(std::span<const float> x) const;
  DecisionPath greedy_path(std::span<const float> x) const;
  int sample(std::span<const float> x, Rng& rng) const;
  std::vector<double> leaf_distribution(int leaf) const;

  struct GraphOutput {
    Var distribution;  ///< B × K
    Var paths;         ///< B × num_leaves
  };
  /// Batched forward for rows of `x` (B × obs_dim).
  template <class T>
  GraphOutput forward(Graph<T>& g, Var x, bool trainable = true) const;

  bool operator==(const SoftTree& o) const;

 private:
  void check_input(std::span<const float> x) const;

  int depth_ = 0;
  int obs_dim_ = 0;
  int num_skills_ = 0;
  Param weights_;
  Param biases_;
  Param leaf_logits_;
};

/// KL(p || q) for two distributions given as values.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// KL(a(x) || b(x)) between the two trees' mixtures.
double sdt_kl(const SoftTree& a, const SoftTree& b, std::span<const float> x);

/// Row-wise KL(p || q) for B × K distribution nodes; returns B × 1.
template <class T>
Var kl_rows(Graph<T>& g, Var p, Var q);

}  // namespace skilltree::sdt
