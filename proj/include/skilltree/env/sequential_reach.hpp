#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "skilltree/diffcore/tensor.hpp"

namespace skilltree::env {

inline constexpr int kObsDim = 11;
inline constexpr int kActDim = 2;
inline constexpr int kNumTargets = 3;
inline constexpr int kHorizon = 200;
inline constexpr float kMaxStep = 0.05f;
inline constexpr float kTargetRadius = 0.08f;
inline constexpr std::array<std::array<float, 2>, kNumTargets> kTargetCenters{{{0.2f, 0.8f}, {0.8f, 0.8f}, {0.5f, 0.2f}}};

/// Observation layout: agent x, agent y, three done flags, three (x, y) target centers.
using Observation = std::array<float, kObsDim>;
using Action = std::array<float, kActDim>;

/// Index of the first constant (target-center) observation feature.
inline constexpr int kFirstConstantFeature = 5;

struct EnvState {
  float x = 0.5f;
  float y = 0.5f;
  std::array<bool, kNumTargets> flags{};
  int step = 0;

  Observation observation() const;
  /// Number of in-order subtasks completed (flags are always a prefix).
  int subtasks() const;
  bool done() const;
  bool operator==(const EnvState&) const = default;
};

struct StepResult {
  EnvState next;
  float reward = 0.0f;
  bool done = false;
  int subtasks = 0;
};

/// Agent uniform in [0.4, 0.6]^2, flags cleared.
EnvState env_reset(std::uint64_t seed);

/// Moves by the clipped action, clamps to the arena, and awards +1 when the
/// next target in the order 1 -> 2 -> 3 is touched. Out-of-order touches do nothing.
/// Done once all targets are complete or the horizon is reached.
StepResult env_step(const EnvState& state, Action action);

Action clip_action(Action a);
bool touches(float x, float y, int target);

/// Inverse of EnvState::observation() given the step counter.
EnvState state_from_observation(std::span<const float> obs, int step);

/// Stateful wrapper owning one episode.
class SequentialReachEnv {
 public:
  Observation reset(std::uint64_t seed);
  StepResult step(Action action);
  const EnvState& state() const noexcept { return state_; }

 private:
  EnvState state_;
};

/// Ordered list of target indices the demonstrator visits.
struct ExpertPlan {
  std::vector<int> targets;
  std::size_t cursor = 0;

  bool complete() const noexcept { return cursor >= targets.size(); }
  /// Skips every target whose disc currently contains the agent.
  void advance(const EnvState& s);
};

/// Uniform over ordered selections of 2 or 3 distinct targets (12 plans).
ExpertPlan sample_plan(Rng& rng);

/// Proportional pursuit of the plan's current target, clipped to +-kMaxStep,
/// plus N(0, noise_std^2) per axis. Advances the plan first if the agent is in
/// the current disc; returns zero action when the plan is complete.
Action scripted_expert(const EnvState& state, ExpertPlan& plan, float noise_std, Rng& rng);

}  // namespace skilltree::env
