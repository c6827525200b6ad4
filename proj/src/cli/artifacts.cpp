#include "skilltree/cli/artifacts.hpp"

#include <cmath>

namespace skilltree::cli {

namespace {

void put_mlp(Checkpoint& ck, const std::string& prefix, const diffcore::Mlp& m) {
  for (const auto& p : m.params()) ck.put_tensor(prefix + "." + p.name, p.value);
}

void get_mlp(const Checkpoint& ck, const std::string& prefix, diffcore::Mlp& m) {
  for (auto& p : m.params()) p.value = ck.tensor(prefix + "." + p.name, p.value.rows, p.value.cols);
}

void put_tree(Checkpoint& ck, const std::string& prefix, const sdt::SoftTree& t) {
  ck.put_tensor(prefix + ".weights", t.weights().value);
  ck.put_tensor(prefix + ".biases", t.biases().value);
  ck.put_tensor(prefix + ".leaf_logits", t.leaf_logits().value);
}

void get_tree(const Checkpoint& ck, const std::string& prefix, sdt::SoftTree& t) {
  for (auto* p : t.param_ptrs()) p->value = ck.tensor(prefix + "." + p->name, p->value.rows, p->value.cols);
}

}  // namespace

Checkpoint skills_checkpoint(const skillvq::SkillModel& model, const Config& config, const std::string& rng_state) {
  Checkpoint ck;
  put_mlp(ck, "encoder", model.encoder);
  ck.put_tensor("codebook", model.codebook.value);
  put_mlp(ck, "decoder", model.decoder);
  put_tree(ck, "prior", model.prior);
  ck.put_text("config", config.to_text());
  ck.put_text("rng", rng_state);
  return ck;
}

Config checkpoint_config(const Checkpoint& ck) {
  try {
    return Config::from_text(ck.text("config"));
  } catch (const ConfigError& e) {
    throw CheckpointError("config", e.what());
  }
}

skillvq::SkillModel load_skills(const Checkpoint& ck) {
  const Config cfg = checkpoint_config(ck);
  skillvq::SkillModel model(skill_config(cfg).model, 0);
  get_mlp(ck, "encoder", model.encoder);
  model.codebook.value = ck.tensor("codebook", model.codebook.value.rows, model.codebook.value.cols);
  get_mlp(ck, "decoder", model.decoder);
  get_tree(ck, "prior", model.prior);
  (void)ck.text("rng");
  return model;
}

Checkpoint policy_checkpoint(const skillvq::SkillModel& skills, const hrl::RlResult& rl, const Config& config) {
  Checkpoint ck = skills_checkpoint(skills, config, rl.rng_state);
  put_tree(ck, "policy", rl.policy);
  ck.put_tensor("codebook.finetuned", rl.codebook.value);
  put_mlp(ck, "critic", rl.critic.online);
  put_mlp(ck, "critic_target", rl.critic.target);
  ck.put_tensor("alpha", diffcore::Tensor(1, 1, static_cast<float>(rl.alpha.alpha())));
  return ck;
}

PolicyBundle load_policy(const Checkpoint& ck) {
  PolicyBundle b;
  b.skills = load_skills(ck);
  const Config cfg = checkpoint_config(ck);
  b.policy = b.skills.prior;
  get_tree(ck, "policy", b.policy);
  b.codebook = ck.tensor("codebook.finetuned", b.skills.codebook.value.rows, b.skills.codebook.value.cols);
  b.critic = hrl::Critic(env::kObsDim, b.skills.embed_dim(), static_cast<int>(cfg.get_int("critic_hidden")), 0);
  get_mlp(ck, "critic", b.critic.online);
  get_mlp(ck, "critic_target", b.critic.target);
  const auto a = ck.tensor("alpha", 1, 1);
  if (!(a.data[0] > 0.0f) || !std::isfinite(a.data[0])) throw CheckpointError("alpha", "alpha must be positive and finite");
  b.alpha = a.data[0];
  return b;
}

}  // namespace skilltree::cli
