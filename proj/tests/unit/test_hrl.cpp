#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "skilltree/diffcore/grad_check.hpp"
#include "skilltree/diffcore/optimizer.hpp"
#include "skilltree/hrl/trainer.hpp"
#include "skilltree/hrl/updates.hpp"
#include "trained_model.hpp"

using namespace skilltree;
using namespace skilltree::hrl;
using diffcore::Matrix;

namespace {

constexpr int S = env::kObsDim;

SkillTransition dummy_transition(int id) {
  SkillTransition t;
  t.skill = id;
  t.reward = static_cast<float>(id);
  t.embedding = {static_cast<float>(id)};
  return t;
}

sdt::SoftTree perturbed(const sdt::SoftTree& base, std::uint64_t seed, float scale) {
  sdt::SoftTree t = base;
  Rng rng(seed);
  for (diffcore::Param* p : t.param_ptrs()) {
    Tensor noise = fixtures::random_tensor(p->value.rows, p->value.cols, scale, rng);
    for (size_t i = 0; i < noise.size(); ++i) p->value.data[i] += noise.data[i];
  }
  return t;
}

Tensor random_states(int n, std::uint64_t seed) {
  Rng rng(seed);
  Tensor out(n, S);
  for (int i = 0; i < n; ++i) {
    const auto o = fixtures::random_observation(rng);
    std::copy(o.begin(), o.end(), out.row_span(i).begin());
  }
  return out;
}

void zero_params(diffcore::Mlp& m) {
  for (auto& p : m.params()) std::fill(p.value.data.begin(), p.value.data.end(), 0.0f);
}

/// A batch of transitions from short random-skill episodes of the trained model.
std::vector<SkillTransition> collect(int count, std::uint64_t seed) {
  const auto exec = fixtures::trained_executor();
  Rng rng(seed);
  std::vector<SkillTransition> out;
  env::SequentialReachEnv e;
  e.reset(rng());
  while (static_cast<int>(out.size()) < count) {
    if (e.state().done()) e.reset(rng());
    out.push_back(execute_skill(e, exec, std::uniform_int_distribution<int>(0, exec.num_skills() - 1)(rng)));
  }
  return out;
}

TransitionBatch batch_of(const std::vector<SkillTransition>& items) {
  std::vector<const SkillTransition*> ptrs;
  for (const auto& t : items) ptrs.push_back(&t);
  return make_transition_batch(ptrs);
}

}  // namespace

TEST_SUITE("hrl") {

TEST_CASE("replay buffer is a bounded FIFO") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 7; ++i) {
    buf.push(dummy_transition(i));
    CHECK(buf.size() <= 3);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.at(0).skill == 4);
  CHECK(buf.at(1).skill == 5);
  CHECK(buf.at(2).skill == 6);
  Rng rng(1);
  const auto drawn = buf.sample(50, rng);
  CHECK(drawn.size() == 50);
  for (const auto* t : drawn) CHECK((t->skill >= 4 && t->skill <= 6));
  CHECK_THROWS_AS(ReplayBuffer(0), ContractViolation);
  CHECK_THROWS_AS(ReplayBuffer(2).sample(1, rng), ContractViolation);
  CHECK_THROWS_AS(buf.at(3), ContractViolation);
}

TEST_CASE("skill rollouts") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  const sdt::SoftTree& policy = skills.prior;
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env::SequentialReachEnv e;
    e.reset(seed);
    Rng rng(seed + 100);
    int transitions = 0;
    while (!e.state().done()) {
      std::vector<env::StepResult> log;
      const auto before = e.state().observation();
      const SkillTransition t = rollout_skill(e, policy, exec, rng, &log);
      ++transitions;
      CHECK(t.state == before);
      CHECK(t.steps == static_cast<int>(log.size()));
      CHECK(t.steps <= exec.horizon());
      float summed = 0.0f;
      for (const auto& r : log) summed += r.reward;
      CHECK(t.reward == summed);
      CHECK(t.reward >= 0.0f);
      CHECK(t.reward <= static_cast<float>(exec.horizon()));
      if (t.reward > 0.0f) ++positive;
      const auto row = exec.codebook->row_span(t.skill);
      CHECK(std::equal(row.begin(), row.end(), t.embedding.begin(), t.embedding.end()));
      CHECK(t.terminal == log.back().done);
      CHECK(t.next_state == e.state().observation());
    }
    CHECK(transitions <= 20);
  }
  CHECK(positive > 0);
}

TEST_CASE("rollouts are reproducible") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  auto run = [&] {
    Rng rng(8);
    const EpisodeRecord rec = run_episode(exec, sampling_chooser(skills.prior), 4, rng);
    return std::make_pair(rec.skills, rec.decision_states);
  };
  CHECK(run() == run());
  Rng rng(1);
  env::SequentialReachEnv e;
  e.reset(1);
  CHECK_THROWS_AS(execute_skill(e, exec, exec.num_skills()), ContractViolation);
}

TEST_CASE("episode records") {
  const auto& skills = fixtures::trained_skills();
  const auto exec = fixtures::trained_executor();
  Rng rng(2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EpisodeRecord rec = run_episode(exec, greedy_chooser(skills.prior), seed, rng);
    CHECK(rec.skills.size() == rec.decision_states.size());
    for (size_t i = 0; i < rec.decision_steps.size(); ++i) CHECK(rec.decision_steps[i] == static_cast<int>(i) * exec.horizon());
    CHECK(rec.completion_steps.size() == static_cast<size_t>(rec.subtasks));
    CHECK(rec.total_reward == static_cast<float>(rec.subtasks));
    for (size_t i = 0; i < rec.skills.size(); ++i)
      CHECK(rec.skills[i] == skills.prior.greedy_path(rec.decision_states[i]).skill());
  }
  const auto a = evaluate(exec, uniform_chooser(exec.num_skills()), 5, 9);
  const auto b = evaluate(exec, uniform_chooser(exec.num_skills()), 5, 9);
  CHECK(a.subtasks == b.subtasks);
  CHECK(a.subtasks.size() == 5);
}

TEST_CASE("critic target special cases") {
  const auto& skills = fixtures::trained_skills();
  const Tensor& book = skills.codebook.value;
  auto items = collect(16, 3);
  items[0].terminal = true;
  items[5].terminal = true;
  const TransitionBatch batch = batch_of(items);
  const Critic critic(S, skills.embed_dim(), 16, 4);
  const sdt::SoftTree policy = perturbed(skills.prior, 5, 0.3f);

  Rng r1(11);
  const Tensor zero_alpha = critic_target(batch, critic, policy, skills.prior, book, 0.0, 0.99, r1);
  Rng r2(11);
  for (int i = 0; i < batch.size; ++i) {
    const auto s = batch.next_states.row_span(i);
    const int k = policy.sample(s, r2);
    if (batch.terminal[static_cast<size_t>(i)]) {
      CHECK(zero_alpha(i, 0) == batch.rewards(i, 0));
      continue;
    }
    Tensor in(1, S + book.cols);
    std::copy(s.begin(), s.end(), in.data.begin());
    const auto z = book.row_span(k);
    std::copy(z.begin(), z.end(), in.data.begin() + S);
    const double expected = batch.rewards(i, 0) + 0.99 * critic.q_target(in)(0, 0);
    CHECK(zero_alpha(i, 0) == doctest::Approx(expected).epsilon(1e-6));
  }

  Rng r3(11);
  const Tensor with_alpha = critic_target(batch, critic, policy, skills.prior, book, 2.0, 0.99, r3);
  for (int i = 0; i < batch.size; ++i) {
    if (batch.terminal[static_cast<size_t>(i)]) continue;
    const auto s = batch.next_states.row_span(i);
    const double kl = sdt::sdt_kl(policy, skills.prior, s);
    CHECK(with_alpha(i, 0) == doctest::Approx(zero_alpha(i, 0) - 0.99 * 2.0 * kl).epsilon(1e-5));
  }

  Rng r4(11);
  Rng r5(11);
  const Tensor at_prior_a = critic_target(batch, critic, skills.prior, skills.prior, book, 0.0, 0.99, r4);
  const Tensor at_prior_b = critic_target(batch, critic, skills.prior, skills.prior, book, 50.0, 0.99, r5);
  for (size_t i = 0; i < at_prior_a.size(); ++i) CHECK(at_prior_a.data[i] == doctest::Approx(at_prior_b.data[i]).epsilon(1e-6));

  Rng r6(1);
  const Critic wrong(S, skills.embed_dim() + 1, 8, 1);
  CHECK_THROWS_AS(critic_target(batch, wrong, policy, skills.prior, book, 0.0, 0.99, r6), ContractViolation);
}

TEST_CASE("zero critic and zero alpha leave the policy unchanged") {
  const auto& skills = fixtures::trained_skills();
  Critic critic(S, skills.embed_dim(), 16, 2);
  zero_params(critic.online);
  sdt::SoftTree policy = perturbed(skills.prior, 3, 0.2f);
  const sdt::SoftTree before = policy;
  diffcore::Param book = skills.codebook;
  auto params = policy.param_ptrs();
  params.push_back(&book);
  diffcore::Optimizer opt(params, {diffcore::OptimizerKind::adam, 1e-2f});
  const auto step = update_policy(random_states(32, 4), policy, skills.prior, critic, book, 0.0, opt);
  CHECK(step.loss == 0.0);
  CHECK(policy == before);
  CHECK(book.value == skills.codebook.value);
}

TEST_CASE("with Q frozen at zero the update pulls the policy toward the prior") {
  const auto& skills = fixtures::trained_skills();
  Critic critic(S, skills.embed_dim(), 16, 2);
  zero_params(critic.online);
  sdt::SoftTree policy = perturbed(skills.prior, 7, 0.5f);
  diffcore::Param book = skills.codebook;
  diffcore::Optimizer opt(policy.param_ptrs(), {diffcore::OptimizerKind::sgd, 0.05f});
  const Tensor states = random_states(64, 8);
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const auto step = update_policy(states, policy, skills.prior, critic, book, 1.0, opt, false);
    CHECK(step.kl < previous);
    previous = step.kl;
  }
}

TEST_CASE("actor loss gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const sdt::SoftTree prior_base(2, S, 4, seed);
    const sdt::SoftTree prior = perturbed(prior_base, seed + 1, 0.5f);
    sdt::SoftTree policy = perturbed(prior, seed + 2, 0.5f);
    Rng rng(seed + 3);
    const diffcore::Mlp critic("critic", S + 3, {8, 8}, 1, rng);
    diffcore::Param book{"codebook", fixtures::random_tensor(4, 3, 1.0f, rng)};
    const Tensor states = random_states(6, seed + 4);
    auto build = [&](diffcore::Graph<double>& g) {
      return actor_loss_graph(g, policy, prior, critic, book, states, 0.7, true).loss;
    };
    auto params = policy.param_ptrs();
    params.push_back(&book);
    CHECK(diffcore::grad_check_params(params, build) < 1e-3);
  }
}

TEST_CASE("exact expected Q agrees with Monte Carlo sampling") {
  const auto& skills = fixtures::trained_skills();
  const sdt::SoftTree policy = perturbed(skills.prior, 12, 0.5f);
  Rng rng(13);
  const diffcore::Mlp critic("critic", S + skills.embed_dim(), {16, 16}, 1, rng);
  const Tensor state = random_states(1, 14);
  diffcore::Graph<double> g;
  const auto a = actor_loss_graph(g, policy, skills.prior, critic, skills.codebook, state, 0.0, false);
  const double exact = g.value(a.expected_q)(0, 0);

  std::vector<double> q(static_cast<size_t>(skills.num_skills()));
  for (int k = 0; k < skills.num_skills(); ++k) {
    Tensor in(1, S + skills.embed_dim());
    std::copy(state.data.begin(), state.data.end(), in.data.begin());
    const auto z = skills.embedding(k);
    std::copy(z.begin(), z.end(), in.data.begin() + S);
    q[static_cast<size_t>(k)] = critic.forward(in)(0, 0);
  }
  const int n = 1000000;
  double sum = 0.0;
  double sum_sq = 0.0;
  Rng draw(15);
  for (int i = 0; i < n; ++i) {
    const double v = q[static_cast<size_t>(policy.sample(state.row_span(0), draw))];
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) <= 3.0 * se);
}

TEST_CASE("critic loss") {
  const auto& skills = fixtures::trained_skills();
  const auto items = collect(32, 21);
  const TransitionBatch batch = batch_of(items);
  Critic critic(S, skills.embed_dim(), 16, 22);
  const Tensor inputs = critic_input(batch.states, batch.embeddings);

  {
    const Tensor exact = critic.q(inputs);
    diffcore::Graph<float> g;
    const Var loss = critic_loss_graph(g, critic.online, inputs, exact);
    // Zero up to float rounding between the batched and the graph forward pass.
    CHECK(std::abs(g.scalar(loss)) < 1e-9);
    const auto grads = g.backward(loss);
    for (const auto& p : critic.online.params())
      for (float d : grads.of(p).data) CHECK(std::abs(d) < 1e-6f);
  }
  {
    Tensor targets(batch.size, 1, 0.7f);
    Tensor shuffled_inputs = inputs;
    std::vector<int> order(static_cast<size_t>(batch.size));
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    for (int i = 0; i < batch.size; ++i) {
      const auto src = inputs.row_span(order[static_cast<size_t>(i)]);
      std::copy(src.begin(), src.end(), shuffled_inputs.row_span(i).begin());
    }
    diffcore::Graph<double> g1;
    diffcore::Graph<double> g2;
    CHECK(g1.scalar(critic_loss_graph(g1, critic.online, inputs, targets)) ==
          doctest::Approx(g2.scalar(critic_loss_graph(g2, critic.online, shuffled_inputs, targets))).epsilon(1e-12));
  }
  {
    Tensor targets(batch.size, 1, 0.7f);
    diffcore::Optimizer opt(critic.online.param_ptrs(), {diffcore::OptimizerKind::adam, 1e-3f});
    double previous = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i) {
      const double loss = update_critic(batch, critic, targets, opt);
      CHECK(loss < previous);
      previous = loss;
    }
  }
}

TEST_CASE("alpha controller") {
  AlphaController a{std::log(0.5), 1.0, 0.01};
  a.update(1.0);
  CHECK(a.alpha() == doctest::Approx(0.5));
  const double before = a.alpha();
  a.update(1.5);
  CHECK(a.alpha() > before);

  AlphaController g{0.0, 1.0, 0.01};
  double prev = g.alpha();
  for (int i = 0; i < 50; ++i) {
    g.update(2.0);
    CHECK(g.alpha() / prev == doctest::Approx(std::exp(0.01)).epsilon(1e-9));
    prev = g.alpha();
  }

  AlphaController big{std::log(5e5), 1.0, 1.0};
  for (int i = 0; i < 20; ++i) big.update(10.0);
  CHECK(big.alpha() <= AlphaController::kMax * (1 + 1e-12));
  AlphaController small{std::log(2e-6), 1.0, 1.0};
  for (int i = 0; i < 20; ++i) small.update(0.0);
  CHECK(small.alpha() >= AlphaController::kMin * (1 - 1e-12));
  CHECK(small.alpha() > 0.0);
  CHECK_THROWS_AS(small.update(-0.1), ContractViolation);
}

TEST_CASE("polyak averaging") {
  Critic c(S, 4, 8, 1);
  Rng rng(2);
  for (auto& p : c.online.params()) diffcore::fill_uniform(p.value, 1.0f, rng);
  Critic copy = c;
  polyak_update(copy, 1.0f);
  for (size_t i = 0; i < c.online.params().size(); ++i) CHECK(copy.target.params()[i].value == c.online.params()[i].value);

  const double gap0 = std::abs(static_cast<double>(c.online.params()[0].value.data[0]) - c.target.params()[0].value.data[0]);
  for (int n = 0; n < 200; ++n) polyak_update(c, 0.005f);
  const double gap = std::abs(static_cast<double>(c.online.params()[0].value.data[0]) - c.target.params()[0].value.data[0]);
  CHECK(gap == doctest::Approx(gap0 * std::pow(0.995, 200)).epsilon(1e-3));
  for (const auto& p : c.target.params()) CHECK(diffcore::all_finite(std::span<const float>(p.value.data)));
  CHECK_THROWS_AS(polyak_update(c, 0.0f), ContractViolation);
  CHECK_THROWS_AS(polyak_update(c, 1.5f), ContractViolation);
}

TEST_CASE("training without gradient steps returns the prior") {
  const auto& skills = fixtures::trained_skills();
  RlConfig cfg;
  cfg.env_steps = 400;
  cfg.eval_every = 5;
  cfg.eval_episodes = 1;
  cfg.seed = 1;
  const RlResult r = train_rl(skills, cfg);
  CHECK(r.gradient_steps == 0);
  CHECK(r.policy == skills.prior);
  CHECK(r.codebook.value == skills.codebook.value);
  CHECK(r.env_steps >= 400);
}

TEST_CASE("short training run is deterministic and keeps alpha in range") {
  const auto& skills = fixtures::trained_skills();
  RlConfig cfg;
  cfg.env_steps = 4000;
  cfg.batch = 32;
  cfg.critic_hidden = 16;
  cfg.eval_every = 20;
  cfg.eval_episodes = 2;
  cfg.alpha_lr = 0.05;
  cfg.seed = 4;
  std::vector<MetricsRow> streamed;
  const RlResult a = train_rl(skills, cfg, [&](const MetricsRow& m) { streamed.push_back(m); });
  const RlResult b = train_rl(skills, cfg);
  CHECK(metrics_to_csv(a.metrics) == metrics_to_csv(b.metrics));
  CHECK(a.policy == b.policy);
  CHECK(a.rng_state == b.rng_state);
  CHECK(a.gradient_steps > 0);
  CHECK_FALSE(a.policy == skills.prior);
  CHECK(streamed.size() == a.metrics.size());
  for (const auto& m : a.metrics) {
    CHECK(m.alpha >= AlphaController::kMin);
    CHECK(m.alpha <= AlphaController::kMax);
    CHECK(m.kl >= 0.0);
  }
  const std::string csv = metrics_to_csv(a.metrics);
  CHECK(csv.rfind("iter,env_steps,mean_return,mean_subtasks,kl,alpha,policy_loss,critic_loss\n", 0) == 0);
  CHECK(metrics_to_csv(metrics_from_csv(csv)) == csv);
}

}  // TEST_SUITE
