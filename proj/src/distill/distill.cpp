#include "skilltree/distill/distill.hpp"

#include <cmath>

namespace skilltree::distill {

LabelSample sample_labels(const sdt::SoftTree& policy, const hrl::SkillExecutor& exec, int n_traj, std::uint64_t seed) {
  require(n_traj >= 1, "sample_labels: n_traj must be >= 1");
  Rng rng(seed);
  const auto choose = hrl::greedy_chooser(policy);
  LabelSample out;
  out.episodes.reserve(static_cast<size_t>(n_traj));
  for (int i = 0; i < n_traj; ++i) out.episodes.push_back(hrl::run_episode(exec, choose, rng(), rng));
  out.labels = labels_from_episodes(out.episodes, policy.num_skills());
  return out;
}

LabelledSet labels_from_episodes(const std::vector<hrl::EpisodeRecord>& episodes, int num_skills) {
  std::vector<float> values;
  LabelledSet set;
  set.num_skills = num_skills;
  for (const auto& ep : episodes) {
    for (std::size_t i = 0; i < ep.skills.size(); ++i) {
      values.insert(values.end(), ep.decision_states[i].begin(), ep.decision_states[i].end());
      set.skills.push_back(ep.skills[i]);
    }
  }
  set.states = diffcore::Tensor(static_cast<int>(set.skills.size()), env::kObsDim, std::move(values));
  return set;
}

std::vector<hrl::EpisodeRecord> clean_dataset(const std::vector<hrl::EpisodeRecord>& episodes, int min_subtasks) {
  std::vector<hrl::EpisodeRecord> kept;
  for (const auto& ep : episodes)
    if (ep.subtasks > min_subtasks) kept.push_back(ep);
  if (kept.empty())
    throw EmptyAfterCleaning("no trajectory completed more than " + std::to_string(min_subtasks) + " subtasks");
  return kept;
}

double fidelity(const HardTree& hard, const sdt::SoftTree& policy, const diffcore::Tensor& states) {
  require(states.rows > 0, "fidelity: empty state set");
  int hit = 0;
  for (int i = 0; i < states.rows; ++i)
    if (hard.predict(states.row_span(i)) == hrl::greedy_skill(policy, states.row_span(i))) ++hit;
  return static_cast<double>(hit) / states.rows;
}

hrl::SkillChooser hard_chooser(const HardTree& tree) {
  return [&tree](const env::Observation& s, Rng&) { return tree.predict(s); };
}

PolicyEvaluation evaluate_policy(const hrl::SkillChooser& actor, const hrl::SkillExecutor& exec, int n_episodes,
                                 std::uint64_t seed) {
  const auto ev = hrl::evaluate(exec, actor, n_episodes, seed);
  PolicyEvaluation out;
  out.mean_subtasks = ev.mean_subtasks;
  out.subtasks = ev.subtasks;
  double var = 0.0;
  for (int c : out.subtasks) var += (c - out.mean_subtasks) * (c - out.mean_subtasks);
  out.std_subtasks = std::sqrt(var / static_cast<double>(out.subtasks.size()));
  return out;
}

}  // namespace skilltree::distill
