#pragma once

#include <cstdint>

#include "skilltree/diffcore/mlp.hpp"

namespace skilltree::hrl {

using diffcore::Mlp;
using diffcore::Tensor;

/// Q(s, z) with a Polyak-averaged target copy.
struct Critic {
  Mlp online;  ///< S+D -> hidden -> hidden -> 1, tanh
  Mlp target;

  Critic() = default;
  Critic(int obs_dim, int embed_dim, int hidden, std::uint64_t seed);

  /// Rows of [s | z] -> B × 1.
  Tensor q(const Tensor& input) const { return online.forward(input); }
  Tensor q_target(const Tensor& input) const { return target.forward(input); }
};

/// target <- tau * online + (1 - tau) * target, elementwise.
void polyak_update(Critic& critic, float tau);

/// Penalty weight alpha kept as log alpha and steered toward a target KL.
struct AlphaController {
  double log_alpha = 0.0;
  double target_kl = 1.0;
  double learning_rate = 3e-4;

  static constexpr double kMin = 1e-6;
  static constexpr double kMax = 1e6;

  double alpha() const;
  /// log alpha += lr * (observed_kl - target_kl), clamped so alpha stays in [kMin, kMax].
  void update(double observed_kl);
};

}  // namespace skilltree::hrl
