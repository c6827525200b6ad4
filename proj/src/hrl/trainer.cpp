#include "skilltree/hrl/trainer.hpp"

#include <cmath>
#include <sstream>

#include "skilltree/env/dataset.hpp"
#include "skilltree/hrl/replay.hpp"
#include "skilltree/hrl/updates.hpp"

namespace skilltree::hrl {

namespace {

struct Running {
  double sum = 0.0;
  long long n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double take() {
    const double m = n ? sum / static_cast<double>(n) : 0.0;
    sum = 0.0;
    n = 0;
    return m;
  }
};

}  // namespace

RlResult train_rl(const skillvq::SkillModel& skills, const RlConfig& cfg,
                  const std::function<void(const MetricsRow&)>& on_metrics) {
  require(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, "gamma must be in [0, 1]");
  require(cfg.batch >= 1, "batch must be >= 1");
  require(cfg.transitions_per_iteration >= 1, "transitions per iteration must be >= 1");
  require(cfg.updates_per_iteration >= 0, "updates per iteration must be >= 0");
  require(cfg.env_steps >= 0, "env step budget must be >= 0");
  require(cfg.eval_every >= 1 && cfg.eval_episodes >= 1, "evaluation schedule must be positive");
  require(cfg.initial_alpha > 0.0, "initial alpha must be positive");
  require(cfg.target_kl > 0.0, "target KL must be positive");

  Rng rng(cfg.seed);
  const std::uint64_t eval_seed = rng();

  RlResult res;
  res.policy = skills.prior;
  res.codebook = diffcore::Param{"codebook", skills.codebook.value};
  res.critic = Critic(env::kObsDim, skills.embed_dim(), cfg.critic_hidden, rng());
  res.alpha.log_alpha = std::log(cfg.initial_alpha);
  res.alpha.target_kl = cfg.target_kl;
  res.alpha.learning_rate = cfg.alpha_lr;

  std::vector<diffcore::Param*> actor_params = res.policy.param_ptrs();
  if (cfg.finetune_codebook) actor_params.push_back(&res.codebook);
  diffcore::Optimizer actor_opt(actor_params, {diffcore::OptimizerKind::adam, cfg.policy_lr});
  diffcore::Optimizer critic_opt(res.critic.online.param_ptrs(), {diffcore::OptimizerKind::adam, cfg.critic_lr});

  const SkillExecutor exec{&skills, &res.codebook.value};
  ReplayBuffer buffer(cfg.buffer_capacity);
  env::SequentialReachEnv env;
  env.reset(rng());

  Running kl_mean, policy_loss, critic_loss;
  long long iter = 0;
  while (res.env_steps < cfg.env_steps) {
    ++iter;
    for (int c = 0; c < cfg.transitions_per_iteration && res.env_steps < cfg.env_steps; ++c) {
      auto t = rollout_skill(env, res.policy, exec, rng);
      res.env_steps += t.steps;
      if (t.terminal) env.reset(rng());
      buffer.push(std::move(t));
    }

    if (buffer.size() >= static_cast<std::size_t>(cfg.batch)) {
      for (int u = 0; u < cfg.updates_per_iteration; ++u) {
        const auto items = buffer.sample(static_cast<std::size_t>(cfg.batch), rng);
        const auto batch = make_transition_batch(items);
        try {
          const Tensor targets = critic_target(batch, res.critic, res.policy, skills.prior, res.codebook.value,
                                               res.alpha.alpha(), cfg.gamma, rng);
          critic_loss.add(update_critic(batch, res.critic, targets, critic_opt));
          const auto step = update_policy(batch.states, res.policy, skills.prior, res.critic, res.codebook,
                                          res.alpha.alpha(), actor_opt, cfg.finetune_codebook);
          policy_loss.add(step.loss);
          kl_mean.add(step.kl);
          res.alpha.update(step.kl);
          polyak_update(res.critic, cfg.tau);
          ++res.gradient_steps;
        } catch (const NumericFault&) {
          ++res.skipped_updates;
        }
      }
    }

    if (iter % cfg.eval_every == 0 || res.env_steps >= cfg.env_steps) {
      const auto ev = evaluate(exec, greedy_chooser(res.policy), cfg.eval_episodes, eval_seed);
      MetricsRow row;
      row.iter = iter;
      row.env_steps = res.env_steps;
      row.mean_return = ev.mean_return;
      row.mean_subtasks = ev.mean_subtasks;
      row.kl = kl_mean.take();
      row.alpha = res.alpha.alpha();
      row.policy_loss = policy_loss.take();
      row.critic_loss = critic_loss.take();
      res.metrics.push_back(row);
      if (on_metrics) on_metrics(row);
    }
  }
  std::ostringstream state;
  state << rng;
  res.rng_state = state.str();
  return res;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "iter,env_steps,mean_return,mean_subtasks,kl,alpha,policy_loss,critic_loss\n";
  for (const auto& r : rows) {
    out << r.iter << ',' << r.env_steps << ',' << env::format_float(r.mean_return) << ','
        << env::format_float(r.mean_subtasks) << ',' << env::format_float(r.kl) << ',' << env::format_float(r.alpha)
        << ',' << env::format_float(r.policy_loss) << ',' << env::format_float(r.critic_loss) << '\n';
  }
  return out.str();
}

std::vector<MetricsRow> metrics_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "iter,env_steps,mean_return,mean_subtasks,kl,alpha,policy_loss,critic_loss")
    throw IoError("metrics CSV: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw IoError("metrics CSV: expected 8 columns in '" + line + "'");
    try {
      MetricsRow r;
      r.iter = std::stoll(cells[0]);
      r.env_steps = std::stoll(cells[1]);
      r.mean_return = std::stod(cells[2]);
      r.mean_subtasks = std::stod(cells[3]);
      r.kl = std::stod(cells[4]);
      r.alpha = std::stod(cells[5]);
      r.policy_loss = std::stod(cells[6]);
      r.critic_loss = std::stod(cells[7]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw IoError("metrics CSV: malformed number in '" + line + "'");
    }
  }
  return rows;
}

}  // namespace skilltree::hrl
