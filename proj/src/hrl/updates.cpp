#include "skilltree/hrl/updates.hpp"

#include <cmath>

namespace skilltree::hrl {

TransitionBatch make_transition_batch(std::span<const SkillTransition* const> items) {
  require(!items.empty(), "empty transition batch");
  const int b = static_cast<int>(items.size());
  const int s = static_cast<int>(items[0]->state.size());
  const int d = static_cast<int>(items[0]->embedding.size());
  TransitionBatch out;
  out.size = b;
  out.states = Tensor(b, s);
  out.embeddings = Tensor(b, d);
  out.rewards = Tensor(b, 1);
  out.next_states = Tensor(b, s);
  out.terminal.resize(static_cast<size_t>(b));
  for (int i = 0; i < b; ++i) {
    const auto& t = *items[static_cast<size_t>(i)];
    require(static_cast<int>(t.embedding.size()) == d, "transition embeddings differ in dimension");
    std::copy(t.state.begin(), t.state.end(), out.states.row_span(i).begin());
    std::copy(t.next_state.begin(), t.next_state.end(), out.next_states.row_span(i).begin());
    std::copy(t.embedding.begin(), t.embedding.end(), out.embeddings.row_span(i).begin());
    out.rewards(i, 0) = t.reward;
    out.terminal[static_cast<size_t>(i)] = t.terminal;
  }
  return out;
}

Tensor critic_input(const Tensor& states, const Tensor& embeddings) {
  require(states.rows == embeddings.rows, "critic input: row counts differ");
  Tensor out(states.rows, states.cols + embeddings.cols);
  for (int i = 0; i < states.rows; ++i) {
    auto r = out.row_span(i);
    const auto s = states.row_span(i);
    const auto z = embeddings.row_span(i);
    std::copy(s.begin(), s.end(), r.begin());
    std::copy(z.begin(), z.end(), r.begin() + states.cols);
  }
  return out;
}

Tensor critic_target(const TransitionBatch& batch, const Critic& critic, const sdt::SoftTree& policy,
                     const sdt::SoftTree& prior, const Tensor& codebook, double alpha, double gamma, Rng& rng) {
  require(batch.next_states.cols == policy.obs_dim() && batch.next_states.cols == prior.obs_dim(),
          "critic target: state dimension mismatch");
  require(codebook.rows == policy.num_skills() && codebook.rows == prior.num_skills(),
          "critic target: codebook size differs from the number of skills");
  require(critic.target.input_dim() == batch.next_states.cols + codebook.cols,
          "critic target: critic input dimension mismatch");
  const int b = batch.size;
  Tensor next_z(b, codebook.cols);
  std::vector<double> kl(static_cast<size_t>(b));
  for (int i = 0; i < b; ++i) {
    const auto s = batch.next_states.row_span(i);
    const auto pi = policy.forward(s).distribution;
    kl[static_cast<size_t>(i)] = sdt::kl_divergence(pi, prior.forward(s).distribution);
    const int k = policy.sample(s, rng);
    const auto z = codebook.row_span(k);
    std::copy(z.begin(), z.end(), next_z.row_span(i).begin());
  }
  const Tensor q = critic.q_target(critic_input(batch.next_states, next_z));
  Tensor out(b, 1);
  for (int i = 0; i < b; ++i) {
    double v = batch.rewards(i, 0);
    if (!batch.terminal[static_cast<size_t>(i)]) v += gamma * (q(i, 0) - alpha * kl[static_cast<size_t>(i)]);
    out(i, 0) = static_cast<float>(v);
  }
  return out;
}

template <class T>
ActorGraph<T> actor_loss_graph(Graph<T>& g, const sdt::SoftTree& policy, const sdt::SoftTree& prior,
                               const diffcore::Mlp& critic, const Param& codebook, const Tensor& states, double alpha,
                               bool codebook_trainable) {
  require(states.cols == policy.obs_dim(), "actor loss: state dimension mismatch");
  require(codebook.value.rows == policy.num_skills(), "actor loss: codebook size differs from the number of skills");
  require(critic.input_dim() == states.cols + codebook.value.cols, "actor loss: critic input dimension mismatch");
  const int b = states.rows;
  const int k = codebook.value.rows;

  const Var x = g.constant(states);
  const Var pi = policy.forward(g, x).distribution;
  const Var p = prior.forward(g, x, false).distribution;

  Tensor repeated(b * k, states.cols);
  std::vector<int> tile(static_cast<size_t>(b * k));
  for (int i = 0; i < b; ++i) {
    const auto s = states.row_span(i);
    for (int j = 0; j < k; ++j) {
      std::copy(s.begin(), s.end(), repeated.row_span(i * k + j).begin());
      tile[static_cast<size_t>(i * k + j)] = j;
    }
  }
  const Var z_all = codebook_trainable ? g.param(codebook) : g.constant(codebook.value);
  const Var inputs = g.concat_cols(g.constant(repeated), g.gather_rows(z_all, std::move(tile)));
  const Var q = g.reshape(critic.forward(g, inputs, false), b, k);

  ActorGraph<T> out;
  out.expected_q = g.sum_rows(g.mul(pi, q));
  out.kl = sdt::kl_rows(g, pi, p);
  out.loss = g.scale(g.mean(g.sub(out.expected_q, g.scale(out.kl, static_cast<T>(alpha)))), T(-1));
  return out;
}

template ActorGraph<float> actor_loss_graph<float>(Graph<float>&, const sdt::SoftTree&, const sdt::SoftTree&,
                                                   const diffcore::Mlp&, const Param&, const Tensor&, double, bool);
template ActorGraph<double> actor_loss_graph<double>(Graph<double>&, const sdt::SoftTree&, const sdt::SoftTree&,
                                                     const diffcore::Mlp&, const Param&, const Tensor&, double, bool);

PolicyStep update_policy(const Tensor& states, sdt::SoftTree& policy, const sdt::SoftTree& prior, const Critic& critic,
                         Param& codebook, double alpha, diffcore::Optimizer& opt, bool finetune_codebook) {
  Graph<float> g;
  const auto a = actor_loss_graph(g, policy, prior, critic.online, codebook, states, alpha, finetune_codebook);
  PolicyStep out;
  out.loss = g.scalar(a.loss);
  if (!std::isfinite(out.loss)) throw NumericFault("actor loss is not finite");
  const auto& kl = g.value(a.kl);
  for (float v : kl.data) out.kl += v;
  out.kl = std::max(0.0, out.kl / kl.rows);
  opt.step(g.backward(a.loss));
  return out;
}

template <class T>
Var critic_loss_graph(Graph<T>& g, const diffcore::Mlp& critic, const Tensor& inputs, const Tensor& targets) {
  require(inputs.rows == targets.rows && targets.cols == 1, "critic loss: target shape mismatch");
  const Var q = critic.forward(g, g.constant(inputs));
  return g.scale(g.mse(q, g.constant(targets)), T(0.5));
}

template Var critic_loss_graph<float>(Graph<float>&, const diffcore::Mlp&, const Tensor&, const Tensor&);
template Var critic_loss_graph<double>(Graph<double>&, const diffcore::Mlp&, const Tensor&, const Tensor&);

double update_critic(const TransitionBatch& batch, Critic& critic, const Tensor& targets, diffcore::Optimizer& opt) {
  Graph<float> g;
  const Var loss = critic_loss_graph(g, critic.online, critic_input(batch.states, batch.embeddings), targets);
  const double value = g.scalar(loss);
  if (!std::isfinite(value)) throw NumericFault("critic loss is not finite");
  opt.step(g.backward(loss));
  return value;
}

}  // namespace skilltree::hrl
