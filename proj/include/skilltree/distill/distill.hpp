#pragma once

#include <cstdint>
#include <vector>

#include "skilltree/distill/cart.hpp"
#include "skilltree/hrl/rollout.hpp"

namespace skilltree::distill {

struct LabelSample {
  std::vector<hrl::EpisodeRecord> episodes;
  LabelledSet labels;
};

/// Runs `n_traj` greedy-path episodes with the soft policy and labels every
/// decision state with the skill it chose.
LabelSample sample_labels(const sdt::SoftTree& policy, const hrl::SkillExecutor& exec, int n_traj, std::uint64_t seed);

/// Flattens the decision states of `episodes` into a label set.
LabelledSet labels_from_episodes(const std::vector<hrl::EpisodeRecord>& episodes, int num_skills);

/// Episodes with more than `min_subtasks` completed subtasks, order preserved.
/// Throws EmptyAfterCleaning if none remain.
std::vector<hrl::EpisodeRecord> clean_dataset(const std::vector<hrl::EpisodeRecord>& episodes, int min_subtasks);

/// Fraction of `states` (rows) where the hard tree matches the policy's greedy-path skill.
double fidelity(const HardTree& hard, const sdt::SoftTree& policy, const diffcore::Tensor& states);

hrl::SkillChooser hard_chooser(const HardTree& tree);

struct PolicyEvaluation {
  double mean_subtasks = 0.0;  ///< ACS
  double std_subtasks = 0.0;   ///< population standard deviation
  std::vector<int> subtasks;
};

PolicyEvaluation evaluate_policy(const hrl::SkillChooser& actor, const hrl::SkillExecutor& exec, int n_episodes,
                                 std::uint64_t seed);

}  // namespace skilltree::distill
