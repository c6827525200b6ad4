#include "skilltree/env/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace skilltree::env {

float Trajectory::total_reward() const {
  float total = 0.0f;
  for (const auto& s : steps) total += s.reward;
  return total;
}

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

GeneratedDataset generate_dataset(int n_traj, std::uint64_t seed, float noise_std) {
  require(n_traj >= 1, "generate_dataset needs n_traj >= 1");
  Rng rng(seed);
  GeneratedDataset out;
  out.trajectories.reserve(static_cast<size_t>(n_traj));
  for (int i = 0; i < n_traj; ++i) {
    ExpertPlan plan = sample_plan(rng);
    out.plans.push_back(plan.targets);
    EnvState state = env_reset(rng());
    Trajectory traj;
    while (true) {
      const Action a = clip_action(scripted_expert(state, plan, noise_std, rng));
      const StepResult r = env_step(state, a);
      traj.steps.push_back({state.observation(), a, r.reward, r.done});
      state = r.next;
      plan.advance(state);
      if (r.done || plan.complete()) break;
    }
    traj.final_obs = state.observation();
    traj.subtasks = state.subtasks();
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out = "traj,t";
  for (int i = 0; i < kObsDim; ++i) out += ",s" + std::to_string(i);
  out += ",a0,a1,r,done\n";
  for (size_t n = 0; n < data.size(); ++n) {
    for (size_t t = 0; t < data[n].steps.size(); ++t) {
      const auto& s = data[n].steps[t];
      out += std::to_string(n) + "," + std::to_string(t);
      for (float v : s.obs) out += "," + format_float(v);
      for (float v : s.action) out += "," + format_float(v);
      out += "," + format_float(s.reward) + (s.done ? ",1\n" : ",0\n");
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::string text = dataset_to_csv(data);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

void finish(Trajectory& traj) {
  if (traj.steps.empty()) return;
  const auto& last = traj.steps.back();
  const EnvState s = state_from_observation(last.obs, static_cast<int>(traj.steps.size()) - 1);
  const StepResult r = env_step(s, last.action);
  traj.final_obs = r.next.observation();
  traj.subtasks = r.next.subtasks();
}

}  // namespace

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("traj,t,", 0) != 0) throw IoError("dataset CSV: missing header");
  Dataset data;
  long current = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) fields.push_back(cell);
    if (fields.size() != static_cast<size_t>(2 + kObsDim + kActDim + 2))
      throw IoError("dataset CSV: wrong field count on line " + std::to_string(line_no));
    try {
      const long traj = std::stol(fields[0]);
      const long t = std::stol(fields[1]);
      if (traj != current) {
        if (traj != current + 1 || t != 0) throw IoError("dataset CSV: trajectories out of order at line " + std::to_string(line_no));
        if (!data.empty()) finish(data.back());
        data.emplace_back();
        current = traj;
      } else if (t != static_cast<long>(data.back().steps.size())) {
        throw IoError("dataset CSV: steps out of order at line " + std::to_string(line_no));
      }
      TrajectoryStep s;
      for (int i = 0; i < kObsDim; ++i) s.obs[static_cast<size_t>(i)] = std::stof(fields[static_cast<size_t>(2 + i)]);
      for (int i = 0; i < kActDim; ++i) s.action[static_cast<size_t>(i)] = std::stof(fields[static_cast<size_t>(2 + kObsDim + i)]);
      s.reward = std::stof(fields[2 + kObsDim + kActDim]);
      s.done = fields[3 + kObsDim + kActDim] == "1";
      data.back().steps.push_back(s);
    } catch (const std::logic_error&) {
      throw IoError("dataset CSV: unparsable value on line " + std::to_string(line_no));
    }
  }
  if (!data.empty()) finish(data.back());
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open dataset '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return dataset_from_csv(ss.str());
}

}  // namespace skilltree::env
