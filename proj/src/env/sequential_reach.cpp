#include "skilltree/env/sequential_reach.hpp"

#include <algorithm>
#include <numeric>

namespace skilltree::env {

Observation EnvState::observation() const {
  Observation o{};
  o[0] = x;
  o[1] = y;
  for (int i = 0; i < kNumTargets; ++i) o[static_cast<size_t>(2 + i)] = flags[static_cast<size_t>(i)] ? 1.0f : 0.0f;
  for (int i = 0; i < kNumTargets; ++i) {
    o[static_cast<size_t>(kFirstConstantFeature + 2 * i)] = kTargetCenters[static_cast<size_t>(i)][0];
    o[static_cast<size_t>(kFirstConstantFeature + 2 * i + 1)] = kTargetCenters[static_cast<size_t>(i)][1];
  }
  return o;
}

int EnvState::subtasks() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), true));
}

bool EnvState::done() const { return subtasks() == kNumTargets || step >= kHorizon; }

EnvState env_reset(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.4f, 0.6f);
  EnvState s;
  s.x = u(rng);
  s.y = u(rng);
  return s;
}

Action clip_action(Action a) {
  for (auto& v : a) v = std::clamp(v, -kMaxStep, kMaxStep);
  return a;
}

bool touches(float x, float y, int target) {
  const auto& c = kTargetCenters[static_cast<size_t>(target)];
  const float dx = x - c[0];
  const float dy = y - c[1];
  return dx * dx + dy * dy <= kTargetRadius * kTargetRadius;
}

StepResult env_step(const EnvState& state, Action action) {
  action = clip_action(action);
  StepResult r;
  r.next = state;
  r.next.x = std::clamp(state.x + action[0], 0.0f, 1.0f);
  r.next.y = std::clamp(state.y + action[1], 0.0f, 1.0f);
  r.next.step = state.step + 1;
  const int next_target = state.subtasks();
  if (next_target < kNumTargets && touches(r.next.x, r.next.y, next_target)) {
    r.next.flags[static_cast<size_t>(next_target)] = true;
    r.reward = 1.0f;
  }
  r.subtasks = r.next.subtasks();
  r.done = r.next.done();
  return r;
}

EnvState state_from_observation(std::span<const float> obs, int step) {
  require(obs.size() == static_cast<size_t>(kObsDim), "observation has wrong dimension");
  EnvState s;
  s.x = obs[0];
  s.y = obs[1];
  for (int i = 0; i < kNumTargets; ++i) s.flags[static_cast<size_t>(i)] = obs[static_cast<size_t>(2 + i)] > 0.5f;
  s.step = step;
  return s;
}

Observation SequentialReachEnv::reset(std::uint64_t seed) {
  state_ = env_reset(seed);
  return state_.observation();
}

StepResult SequentialReachEnv::step(Action action) {
  auto r = env_step(state_, action);
  state_ = r.next;
  return r;
}

void ExpertPlan::advance(const EnvState& s) {
  while (!complete() && touches(s.x, s.y, targets[cursor])) ++cursor;
}

ExpertPlan sample_plan(Rng& rng) {
  std::array<int, kNumTargets> order{};
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with an explicit draw so the sampler does not depend on std::shuffle internals.
  for (int i = kNumTargets - 1; i > 0; --i) {
    const int j = std::uniform_int_distribution<int>(0, i)(rng);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  const int length = std::uniform_int_distribution<int>(2, 3)(rng);
  ExpertPlan plan;
  plan.targets.assign(order.begin(), order.begin() + length);
  return plan;
}

Action scripted_expert(const EnvState& state, ExpertPlan& plan, float noise_std, Rng& rng) {
  require(!plan.targets.empty(), "expert plan is empty");
  plan.advance(state);
  if (plan.complete()) return Action{0.0f, 0.0f};
  const auto& c = kTargetCenters[static_cast<size_t>(plan.targets[plan.cursor])];
  Action a = clip_action({c[0] - state.x, c[1] - state.y});
  if (noise_std > 0.0f) {
    std::normal_distribution<float> noise(0.0f, noise_std);
    for (auto& v : a) v += noise(rng);
  }
  return a;
}

}  // namespace skilltree::env
