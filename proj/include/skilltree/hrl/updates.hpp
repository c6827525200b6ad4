#pragma once

#include <span>

#include "skilltree/diffcore/optimizer.hpp"
#include "skilltree/hrl/critic.hpp"
#include "skilltree/hrl/replay.hpp"
#include "skilltree/sdt/soft_tree.hpp"

namespace skilltree::hrl {

using diffcore::Graph;
using diffcore::Param;
using diffcore::Var;

/// Replay transitions stacked into arrays.
struct TransitionBatch {
  Tensor states;       ///< B × S
  Tensor embeddings;   ///< B × D, the stored snapshots
  Tensor rewards;      ///< B × 1
  Tensor next_states;  ///< B × S
  std::vector<bool> terminal;
  int size = 0;
};

TransitionBatch make_transition_batch(std::span<const SkillTransition* const> items);

/// Rows [s | z] for a critic.
Tensor critic_input(const Tensor& states, const Tensor& embeddings);

/// r + gamma (1 - terminal) [Q_target(s', Z[k']) - alpha KL(pi(.|s') || p(.|s'))],
/// with k' ~ pi(.|s') drawn from `rng`. Returns B × 1.
Tensor critic_target(const TransitionBatch& batch, const Critic& critic, const sdt::SoftTree& policy,
                     const sdt::SoftTree& prior, const Tensor& codebook, double alpha, double gamma, Rng& rng);

template <class T>
struct ActorGraph {
  Var loss;        ///< -mean(sum_k pi_k Q(s, Z[k]) - alpha KL)
  Var kl;          ///< B × 1
  Var expected_q;  ///< B × 1
};

/// Actor objective over the states of a batch. The critic enters as constants;
/// the codebook is a parameter when `codebook_trainable`, otherwise a constant.
template <class T>
ActorGraph<T> actor_loss_graph(Graph<T>& g, const sdt::SoftTree& policy, const sdt::SoftTree& prior,
                               const diffcore::Mlp& critic, const Param& codebook, const Tensor& states, double alpha,
                               bool codebook_trainable);

struct PolicyStep {
  double loss = 0.0;
  double kl = 0.0;  ///< batch mean
};

/// One optimizer step on the actor objective. `opt` may hold the codebook as
/// well as the policy parameters. Throws NumericFault, leaving parameters
/// untouched, when the loss or a gradient is non-finite.
PolicyStep update_policy(const Tensor& states, sdt::SoftTree& policy, const sdt::SoftTree& prior, const Critic& critic,
                         Param& codebook, double alpha, diffcore::Optimizer& opt, bool finetune_codebook = true);

/// 0.5 mean (Q(s, z) - target)^2.
template <class T>
Var critic_loss_graph(Graph<T>& g, const diffcore::Mlp& critic, const Tensor& inputs, const Tensor& targets);

/// One optimizer step on the critic loss; returns the loss before the step.
double update_critic(const TransitionBatch& batch, Critic& critic, const Tensor& targets, diffcore::Optimizer& opt);

}  // namespace skilltree::hrl
