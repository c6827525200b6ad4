#pragma once

#include <cstddef>
#include <vector>

#include "skilltree/env/sequential_reach.hpp"

namespace skilltree::hrl {

/// One high-level decision: state, chosen skill, the embedding used to execute
/// it, summed reward over the skill's steps and the state it led to.
struct SkillTransition {
  env::Observation state{};
  int skill = 0;
  std::vector<float> embedding;  ///< codebook row at collection time
  float reward = 0.0f;
  env::Observation next_state{};
  bool terminal = false;
  int steps = 0;  ///< low-level steps actually executed (<= h)
};

/// Fixed-capacity FIFO store of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(SkillTransition t);
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  /// i-th transition in insertion order among those still stored.
  const SkillTransition& at(std::size_t i) const;
  /// `n` transitions drawn uniformly with replacement.
  std::vector<const SkillTransition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<SkillTransition> items_;
  std::size_t head_ = 0;  // oldest slot once full
};

}  // namespace skilltree::hrl
