#include "skilltree/explain/explain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "skilltree/env/dataset.hpp"

namespace skilltree::explain {

std::vector<std::string> default_feature_names() {
  return {"x", "y", "flag1", "flag2", "flag3", "t1x", "t1y", "t2x", "t2y", "t3x", "t3y"};
}

namespace {

std::string signed_value(double v) {
  std::string s = env::format_float(v);
  return v >= 0.0 ? "+" + s : s;
}

}  // namespace

std::string render_tree(const sdt::SoftTree& tree, const std::vector<std::string>& names) {
  require(static_cast<int>(names.size()) == tree.obs_dim(), "feature name count differs from the tree's input size");
  std::ostringstream out;
  std::function<void(int, int, int)> rec = [&](int layer, int position, int indent) {
    out << std::string(static_cast<size_t>(2 * indent), ' ');
    if (layer == tree.depth()) {
      const auto dist = tree.leaf_distribution(position);
      const auto best = std::max_element(dist.begin(), dist.end()) - dist.begin();
      out << "leaf " << best + 1 << " p=" << env::format_float(dist[static_cast<size_t>(best)]) << '\n';
      return;
    }
    const int u = (1 << layer) - 1 + position;
    std::vector<int> order(static_cast<size_t>(tree.obs_dim()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::fabs(tree.weights().value(a, u)) > std::fabs(tree.weights().value(b, u));
    });
    out << "node " << u << " bias " << signed_value(tree.biases().value.data[static_cast<size_t>(u)]);
    for (int i = 0; i < std::min(3, tree.obs_dim()); ++i) {
      const int f = order[static_cast<size_t>(i)];
      out << ' ' << names[static_cast<size_t>(f)] << ' ' << signed_value(tree.weights().value(f, u));
    }
    out << '\n';
    rec(layer + 1, 2 * position, indent + 1);
    rec(layer + 1, 2 * position + 1, indent + 1);
  };
  rec(0, 0, 0);
  return out.str();
}

std::string render_tree(const distill::HardTree& tree, const std::vector<std::string>& names) {
  require(static_cast<int>(names.size()) == env::kObsDim, "feature name count differs from the observation size");
  return tree.to_text(names);
}

distill::HardTree parse_hard_tree(const std::string& text, const std::vector<std::string>& names) {
  require(static_cast<int>(names.size()) == env::kObsDim, "feature name count differs from the observation size");
  return distill::HardTree::from_text(text, names);
}

AblationRow skill_ablation(const hrl::SkillExecutor& exec, int skill, int n_episodes, std::uint64_t seed) {
  require(skill >= 0 && skill < exec.num_skills(), "ablation skill out of range");
  require(n_episodes >= 1, "ablation needs at least one episode");
  Rng rng(seed);
  AblationRow row;
  row.skill = skill;
  row.episodes = n_episodes;
  row.success_rate.assign(env::kNumTargets, 0.0);
  std::vector<env::StepResult> log;
  for (int e = 0; e < n_episodes; ++e) {
    env::SequentialReachEnv env;
    env.reset(rng());
    std::vector<bool> touched(env::kNumTargets, false);
    while (!env.state().done()) {
      log.clear();
      hrl::execute_skill(env, exec, skill, &log);
      for (const auto& r : log)
        for (int j = 0; j < env::kNumTargets; ++j)
          if (env::touches(r.next.x, r.next.y, j)) touched[static_cast<size_t>(j)] = true;
    }
    for (int j = 0; j < env::kNumTargets; ++j)
      if (touched[static_cast<size_t>(j)]) row.success_rate[static_cast<size_t>(j)] += 1.0;
  }
  for (auto& r : row.success_rate) r /= n_episodes;
  return row;
}

std::vector<AblationRow> ablation_matrix(const hrl::SkillExecutor& exec, int n_episodes, std::uint64_t seed) {
  std::vector<AblationRow> rows;
  for (int k = 0; k < exec.num_skills(); ++k) rows.push_back(skill_ablation(exec, k, n_episodes, seed));
  return rows;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "k,subtask,success_rate,episodes\n";
  for (const auto& row : rows)
    for (std::size_t j = 0; j < row.success_rate.size(); ++j)
      out << row.skill + 1 << ',' << j + 1 << ',' << env::format_float(row.success_rate[j]) << ',' << row.episodes
          << '\n';
  return out.str();
}

SkillTrace record_trace(const sdt::SoftTree& policy, const hrl::SkillExecutor& exec, std::uint64_t seed) {
  env::SequentialReachEnv env;
  env.reset(seed);
  SkillTrace trace;
  std::vector<env::StepResult> log;
  while (!env.state().done()) {
    const auto s = env.state().observation();
    const auto path = policy.greedy_path(s);
    trace.decisions.push_back({env.state().step, path.skill(), path.probability()});
    log.clear();
    hrl::execute_skill(env, exec, path.skill(), &log);
    for (const auto& r : log)
      if (r.reward > 0.0f) trace.completion_steps.push_back(r.next.step);
  }
  trace.subtasks = env.state().subtasks();
  return trace;
}

std::string trace_to_csv(const SkillTrace& trace) {
  std::ostringstream out;
  out << "t,k,path_prob\n";
  for (const auto& d : trace.decisions)
    out << d.t << ',' << d.skill + 1 << ',' << env::format_float(d.path_probability) << '\n';
  return out.str();
}

std::string completions_to_csv(const SkillTrace& trace) {
  std::ostringstream out;
  out << "subtask,t\n";
  for (std::size_t i = 0; i < trace.completion_steps.size(); ++i) out << i + 1 << ',' << trace.completion_steps[i] << '\n';
  return out.str();
}

int longest_repeat(const SkillTrace& trace) {
  int best = 0;
  int run = 0;
  for (std::size_t i = 0; i < trace.decisions.size(); ++i) {
    run = (i > 0 && trace.decisions[i].skill == trace.decisions[i - 1].skill) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

}  // namespace skilltree::explain
