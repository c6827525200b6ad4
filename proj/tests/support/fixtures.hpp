#pragma once

#include <cstdint>
#include <random>

#include "skilltree/diffcore/tensor.hpp"
#include "skilltree/env/sequential_reach.hpp"

namespace fixtures {

inline skilltree::diffcore::Tensor random_tensor(int rows, int cols, float bound, skilltree::Rng& rng) {
  skilltree::diffcore::Tensor t(rows, cols);
  skilltree::diffcore::fill_uniform(t, bound, rng);
  return t;
}

template <class T>
skilltree::diffcore::Matrix<T> random_matrix(int rows, int cols, double bound, std::uint64_t seed) {
  skilltree::Rng rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  skilltree::diffcore::Matrix<T> m(rows, cols);
  for (auto& v : m.data) v = static_cast<T>(u(rng));
  return m;
}

/// A plausible observation: agent anywhere in the arena, a prefix of flags set, fixed target centers.
inline skilltree::env::Observation random_observation(skilltree::Rng& rng) {
  using namespace skilltree::env;
  std::uniform_real_distribution<float> pos(0.0f, 1.0f);
  EnvState s;
  s.x = pos(rng);
  s.y = pos(rng);
  const int done = std::uniform_int_distribution<int>(0, kNumTargets - 1)(rng);
  for (int i = 0; i < done; ++i) s.flags[static_cast<size_t>(i)] = true;
  return s.observation();
}

}  // namespace fixtures
