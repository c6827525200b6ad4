#pragma once

#include "skilltree/cli/checkpoint.hpp"
#include "skilltree/cli/config.hpp"
#include "skilltree/hrl/trainer.hpp"
#include "skilltree/skillvq/skill_model.hpp"

namespace skilltree::cli {

/// Encoder, decoder, codebook and prior, plus the config snapshot and rng state.
Checkpoint skills_checkpoint(const skillvq::SkillModel& model, const Config& config, const std::string& rng_state);
/// Rebuilds the model from the checkpoint's own config snapshot.
skillvq::SkillModel load_skills(const Checkpoint& ck);
Config checkpoint_config(const Checkpoint& ck);

/// Skill sections plus policy tree, finetuned codebook, critic, target critic and alpha.
Checkpoint policy_checkpoint(const skillvq::SkillModel& skills, const hrl::RlResult& rl, const Config& config);

struct PolicyBundle {
  skillvq::SkillModel skills;
  sdt::SoftTree policy;
  diffcore::Tensor codebook;  ///< finetuned
  hrl::Critic critic;
  double alpha = 1.0;
};

PolicyBundle load_policy(const Checkpoint& ck);

}  // namespace skilltree::cli
