#pragma once

#include <string>
#include <vector>

#include "skilltree/diffcore/graph.hpp"

namespace skilltree::diffcore {

/// Feed-forward network: tanh hidden layers, linear output.
/// Parameters live in a vector, so their addresses survive moves of the Mlp.
class Mlp {
 public:
  Mlp() = default;
  /// Weights and biases ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
  Mlp(const std::string& name, int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng);

  int input_dim() const;
  int output_dim() const;

  /// `trainable = false` enters the weights as constants (no weight gradients).
  template <class T>
  Var forward(Graph<T>& g, Var x, bool trainable = true) const;

  /// Batched forward without a graph (rows are samples).
  Tensor forward(const Tensor& x) const;

  std::vector<Param>& params() noexcept { return params_; }
  const std::vector<Param>& params() const noexcept { return params_; }
  std::vector<Param*> param_ptrs();

 private:
  std::vector<Param> params_;  // W0, b0, W1, b1, ...
};

}  // namespace skilltree::diffcore
