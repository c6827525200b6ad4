#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "skilltree/hrl/critic.hpp"
#include "skilltree/hrl/rollout.hpp"
#include "skilltree/sdt/soft_tree.hpp"
#include "skilltree/skillvq/skill_model.hpp"

namespace skilltree::hrl {

struct RlConfig {
  double gamma = 0.99;
  float tau = 0.005f;
  float policy_lr = 3e-4f;  ///< also used for the codebook
  float critic_lr = 3e-4f;
  double alpha_lr = 3e-4;  ///< on log alpha
  double target_kl = 1.0;
  double initial_alpha = 1.0;
  int batch = 256;
  std::size_t buffer_capacity = 100000;
  int transitions_per_iteration = 4;
  int updates_per_iteration = 4;
  long long env_steps = 200000;
  int critic_hidden = 128;
  bool finetune_codebook = true;
  int eval_every = 250;  ///< iterations between metrics rows
  int eval_episodes = 10;
  std::uint64_t seed = 0;
};

struct MetricsRow {
  long long iter = 0;
  long long env_steps = 0;
  double mean_return = 0.0;    ///< greedy evaluation
  double mean_subtasks = 0.0;  ///< greedy evaluation
  double kl = 0.0;             ///< mean batch KL since the previous row
  double alpha = 0.0;
  double policy_loss = 0.0;    ///< mean since the previous row
  double critic_loss = 0.0;
};

struct RlResult {
  sdt::SoftTree policy;
  diffcore::Param codebook;
  Critic critic;
  AlphaController alpha;
  std::vector<MetricsRow> metrics;
  long long env_steps = 0;
  long long gradient_steps = 0;
  long long skipped_updates = 0;
  std::string rng_state;  ///< training generator state at exit
};

/// Policy starts as a copy of the skill prior; decoder and prior stay frozen.
/// Each iteration collects `transitions_per_iteration` skill transitions with
/// the sampling policy, then runs `updates_per_iteration` critic, actor, alpha
/// and Polyak updates once the buffer holds a full batch.
RlResult train_rl(const skillvq::SkillModel& skills, const RlConfig& config,
                  const std::function<void(const MetricsRow&)>& on_metrics = {});

/// Header `iter,env_steps,mean_return,mean_subtasks,kl,alpha,policy_loss,critic_loss`.
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(const std::string& text);

}  // namespace skilltree::hrl
