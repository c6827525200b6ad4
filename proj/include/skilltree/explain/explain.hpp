#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skilltree/distill/hard_tree.hpp"
#include "skilltree/hrl/rollout.hpp"
#include "skilltree/sdt/soft_tree.hpp"

namespace skilltree::explain {

/// x, y, flag1..flag3, t1x, t1y, t2x, t2y, t3x, t3y.
std::vector<std::string> default_feature_names();

/// Inner nodes list their bias and the three largest-|w| features; leaves list
/// their most probable skill (1-based) and its probability.
std::string render_tree(const sdt::SoftTree& tree, const std::vector<std::string>& names);
/// `name < threshold` per split and `leaf k n` per leaf, indented by depth.
std::string render_tree(const distill::HardTree& tree, const std::vector<std::string>& names);
distill::HardTree parse_hard_tree(const std::string& text, const std::vector<std::string>& names);

/// One row of the ablation matrix: the skill is forced at every decision.
struct AblationRow {
  int skill = 0;  ///< 0-based
  std::vector<double> success_rate;  ///< per target: touched at least once during the episode
  int episodes = 0;
};

AblationRow skill_ablation(const hrl::SkillExecutor& exec, int skill, int n_episodes, std::uint64_t seed);
std::vector<AblationRow> ablation_matrix(const hrl::SkillExecutor& exec, int n_episodes, std::uint64_t seed);
/// Header `k,subtask,success_rate,episodes`, 1-based k and subtask.
std::string ablation_to_csv(const std::vector<AblationRow>& rows);

struct TraceEntry {
  int t = 0;      ///< environment step of the decision
  int skill = 0;  ///< 0-based
  double path_probability = 0.0;
};

struct SkillTrace {
  std::vector<TraceEntry> decisions;
  std::vector<int> completion_steps;  ///< step at which in-order subtask i+1 completed
  int subtasks = 0;
};

/// One greedy-path episode from env_reset(seed).
SkillTrace record_trace(const sdt::SoftTree& policy, const hrl::SkillExecutor& exec, std::uint64_t seed);
/// Header `t,k,path_prob`, 1-based k.
std::string trace_to_csv(const SkillTrace& trace);
/// Header `subtask,t`.
std::string completions_to_csv(const SkillTrace& trace);
/// Longest run of identical consecutive skill choices.
int longest_repeat(const SkillTrace& trace);

}  // namespace skilltree::explain
