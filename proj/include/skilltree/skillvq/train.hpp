#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skilltree/skillvq/skill_model.hpp"

namespace skilltree::skillvq {

struct SkillTrainConfig {
  SkillModelConfig model;
  float beta = 0.25f;
  int epochs = 50;
  int batch = 64;
  float learning_rate = 3e-3f;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.1;
  /// Dead codes are re-seeded only during this leading fraction of epochs.
  double dead_code_reset_fraction = 0.5;
};

struct EpochStats {
  int epoch = 0;
  double total = 0.0;
  double reconstruction = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double prior = 0.0;
  double heldout_mse = 0.0;              ///< raw action units^2, per element
  double heldout_prior_agreement = 0.0;  ///< argmax prior == quantized index
  int codes_used = 0;
  int codes_reset = 0;
};

struct HeldoutMetrics {
  double mse = 0.0;
  double prior_agreement = 0.0;
  std::vector<int> code_usage;
  int segments = 0;
};

struct SkillTrainResult {
  SkillModel model;
  std::vector<EpochStats> curve;
  std::vector<std::size_t> heldout_trajectories;
  std::string rng_state;  ///< training generator state at exit
};

/// Every (trajectory, start) pair with start <= length - h.
std::vector<std::pair<std::size_t, std::size_t>> segment_windows(const env::Dataset& data,
                                                                 std::span<const std::size_t> trajectories, int h);

/// Reconstruction error (raw action units) and prior agreement over every window of `trajectories`.
HeldoutMetrics evaluate_segments(const SkillModel& model, const env::Dataset& data,
                                 std::span<const std::size_t> trajectories);

/// Minimizes the VQ objective over uniformly sampled segments with Adam.
/// Throws ContractViolation if no trajectory is at least h long.
SkillTrainResult train_skills(const env::Dataset& data, const SkillTrainConfig& config);

}  // namespace skilltree::skillvq
