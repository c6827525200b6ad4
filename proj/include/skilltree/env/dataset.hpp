#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skilltree/env/sequential_reach.hpp"

namespace skilltree::env {

struct TrajectoryStep {
  Observation obs{};
  Action action{};  ///< as applied, i.e. after clipping
  float reward = 0.0f;
  bool done = false;
  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Observation final_obs{};
  int subtasks = 0;

  std::size_t length() const noexcept { return steps.size(); }
  float total_reward() const;
  bool operator==(const Trajectory&) const = default;
};

using Dataset = std::vector<Trajectory>;

struct GeneratedDataset {
  Dataset trajectories;
  std::vector<std::vector<int>> plans;  ///< plan followed by each trajectory
};

/// Scripted demonstrations with random 2-3 target plans. Each trajectory stops
/// once its plan is complete or the environment is done.
GeneratedDataset generate_dataset(int n_traj, std::uint64_t seed, float noise_std = 0.005f);

/// CSV with header `traj,t,s0..s10,a0,a1,r,done`; values printed with 9 significant digits.
std::string dataset_to_csv(const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
/// Final states and subtask counts are rebuilt by replaying the last logged action.
Dataset dataset_from_csv(const std::string& text);
Dataset load_dataset(const std::filesystem::path& path);

/// `%.9g` rendering used by every CSV writer in the project.
std::string format_float(double v);

}  // namespace skilltree::env
