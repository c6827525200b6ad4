#include "skilltree/hrl/rollout.hpp"

#include <algorithm>

namespace skilltree::hrl {

SkillTransition execute_skill(env::SequentialReachEnv& env, const SkillExecutor& exec, int k,
                              std::vector<env::StepResult>* log) {
  require(exec.skills && exec.codebook, "skill executor is not bound");
  require(k >= 0 && k < exec.num_skills(), "skill index out of range");
  require(!env.state().done(), "skill rollout on a finished episode");
  SkillTransition t;
  t.state = env.state().observation();
  t.skill = k;
  const auto z = exec.codebook->row_span(k);
  t.embedding.assign(z.begin(), z.end());
  env::Observation s = t.state;
  for (int i = 0; i < exec.horizon(); ++i) {
    const auto a = skillvq::low_level_action(*exec.skills, s, t.embedding);
    const auto r = env.step(a);
    if (log) log->push_back(r);
    t.reward += r.reward;
    ++t.steps;
    s = r.next.observation();
    if (r.done) {
      t.terminal = true;
      break;
    }
  }
  t.next_state = s;
  return t;
}

SkillTransition rollout_skill(env::SequentialReachEnv& env, const sdt::SoftTree& policy, const SkillExecutor& exec,
                              Rng& rng, std::vector<env::StepResult>* log) {
  const auto s = env.state().observation();
  return execute_skill(env, exec, policy.sample(s, rng), log);
}

int greedy_skill(const sdt::SoftTree& tree, std::span<const float> s) { return tree.greedy_path(s).skill(); }

SkillChooser greedy_chooser(const sdt::SoftTree& tree) {
  return [&tree](const env::Observation& s, Rng&) { return greedy_skill(tree, s); };
}

SkillChooser sampling_chooser(const sdt::SoftTree& tree) {
  return [&tree](const env::Observation& s, Rng& rng) { return tree.sample(s, rng); };
}

SkillChooser uniform_chooser(int num_skills) {
  require(num_skills >= 1, "uniform chooser needs at least one skill");
  return [num_skills](const env::Observation&, Rng& rng) {
    return std::uniform_int_distribution<int>(0, num_skills - 1)(rng);
  };
}

EpisodeRecord run_episode(const SkillExecutor& exec, const SkillChooser& choose, std::uint64_t reset_seed, Rng& rng) {
  env::SequentialReachEnv env;
  env.reset(reset_seed);
  EpisodeRecord rec;
  std::vector<env::StepResult> log;
  while (!env.state().done()) {
    const auto s = env.state().observation();
    const int k = choose(s, rng);
    rec.decision_states.push_back(s);
    rec.skills.push_back(k);
    rec.decision_steps.push_back(env.state().step);
    log.clear();
    const auto t = execute_skill(env, exec, k, &log);
    for (const auto& r : log)
      if (r.reward > 0.0f) rec.completion_steps.push_back(r.next.step);
    rec.total_reward += t.reward;
  }
  rec.subtasks = env.state().subtasks();
  rec.length = env.state().step;
  return rec;
}

EvalSummary evaluate(const SkillExecutor& exec, const SkillChooser& choose, int episodes, std::uint64_t seed) {
  require(episodes >= 1, "evaluation needs at least one episode");
  Rng rng(seed);
  EvalSummary out;
  for (int e = 0; e < episodes; ++e) {
    const auto rec = run_episode(exec, choose, rng(), rng);
    out.mean_return += rec.total_reward;
    out.mean_subtasks += rec.subtasks;
    out.subtasks.push_back(rec.subtasks);
  }
  out.mean_return /= episodes;
  out.mean_subtasks /= episodes;
  return out;
}

}  // namespace skilltree::hrl
