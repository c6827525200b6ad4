#include "skilltree/hrl/critic.hpp"

#include <algorithm>
#include <cmath>

namespace skilltree::hrl {

Critic::Critic(int obs_dim, int embed_dim, int hidden, std::uint64_t seed) {
  Rng rng(seed);
  online = Mlp("critic", obs_dim + embed_dim, {hidden, hidden}, 1, rng);
  target = online;
}

void polyak_update(Critic& critic, float tau) {
  require(tau > 0.0f && tau <= 1.0f, "polyak rate must be in (0, 1]");
  auto& dst = critic.target.params();
  const auto& src = critic.online.params();
  require(dst.size() == src.size(), "critic and target differ in layout");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    require(dst[i].value.same_shape(src[i].value), "critic and target differ in shape");
    auto& d = dst[i].value.data;
    const auto& s = src[i].value.data;
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = tau * s[j] + (1.0f - tau) * d[j];
  }
}

double AlphaController::alpha() const { return std::exp(log_alpha); }

void AlphaController::update(double observed_kl) {
  require(observed_kl >= 0.0, "observed KL must be non-negative");
  log_alpha = std::clamp(log_alpha + learning_rate * (observed_kl - target_kl), std::log(kMin), std::log(kMax));
}

}  // namespace skilltree::hrl
