#pragma once

#include <functional>
#include <vector>

#include "skilltree/hrl/replay.hpp"
#include "skilltree/skillvq/skill_model.hpp"

namespace skilltree::hrl {

/// Frozen decoder plus the (possibly finetuned) codebook it is driven with.
struct SkillExecutor {
  const skillvq::SkillModel* skills = nullptr;
  const diffcore::Tensor* codebook = nullptr;  ///< K × D

  int num_skills() const { return codebook->rows; }
  int horizon() const { return skills->segment_length(); }
};

/// Runs skill `k` for h decoder steps or until the episode ends.
/// Appends every environment step to `log` when given.
SkillTransition execute_skill(env::SequentialReachEnv& env, const SkillExecutor& exec, int k,
                              std::vector<env::StepResult>* log = nullptr);

/// Samples k ~ policy(.|s) and executes it. Requires a live episode.
SkillTransition rollout_skill(env::SequentialReachEnv& env, const sdt::SoftTree& policy, const SkillExecutor& exec,
                              Rng& rng, std::vector<env::StepResult>* log = nullptr);

/// Picks a skill for an observation.
using SkillChooser = std::function<int(const env::Observation&, Rng&)>;

/// Skill of the greedy decision path: follow the likelier branch at every node,
/// then take the leaf's most probable skill (ties to the smallest index).
int greedy_skill(const sdt::SoftTree& tree, std::span<const float> s);

SkillChooser greedy_chooser(const sdt::SoftTree& tree);
SkillChooser sampling_chooser(const sdt::SoftTree& tree);
SkillChooser uniform_chooser(int num_skills);

struct EpisodeRecord {
  std::vector<env::Observation> decision_states;
  std::vector<int> skills;
  std::vector<int> decision_steps;  ///< environment step at which each skill started
  std::vector<int> completion_steps;  ///< step count at which subtask i+1 completed
  float total_reward = 0.0f;
  int subtasks = 0;
  int length = 0;
};

/// One full episode from env_reset(seed).
EpisodeRecord run_episode(const SkillExecutor& exec, const SkillChooser& choose, std::uint64_t reset_seed, Rng& rng);

struct EvalSummary {
  double mean_return = 0.0;
  double mean_subtasks = 0.0;  ///< ACS
  std::vector<int> subtasks;   ///< per episode
};

/// `episodes` episodes; reset seeds and chooser randomness derive from `seed`.
EvalSummary evaluate(const SkillExecutor& exec, const SkillChooser& choose, int episodes, std::uint64_t seed);

}  // namespace skilltree::hrl
