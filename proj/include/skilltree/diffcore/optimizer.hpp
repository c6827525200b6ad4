#pragma once

#include <vector>

#include "skilltree/diffcore/graph.hpp"

namespace skilltree::diffcore {

enum class OptimizerKind { sgd, adam };

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adam;
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

/// First-order optimizer bound to a fixed list of parameters.
/// The parameters must outlive the optimizer and stay at the same address.
class Optimizer {
 public:
  Optimizer(std::vector<Param*> params, OptimizerSettings settings);

  /// p <- p - lr*g (sgd) or the bias-corrected Adam update.
  /// Throws NumericFault, leaving every parameter untouched, if any gradient is non-finite.
  void step(const Gradients<float>& grads);

  long long steps_taken() const noexcept { return t_; }
  const OptimizerSettings& settings() const noexcept { return settings_; }

 private:
  std::vector<Param*> params_;
  OptimizerSettings settings_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long long t_ = 0;
};

}  // namespace skilltree::diffcore
