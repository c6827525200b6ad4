#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skilltree/diffcore/mlp.hpp"
#include "skilltree/env/dataset.hpp"
#include "skilltree/sdt/soft_tree.hpp"

namespace skilltree::skillvq {

using diffcore::Graph;
using diffcore::Matrix;
using diffcore::Mlp;
using diffcore::Param;
using diffcore::Tensor;
using diffcore::Var;

struct SkillModelConfig {
  int segment_length = 10;  ///< h
  int num_skills = 8;       ///< K
  int embed_dim = 8;        ///< D
  int hidden = 128;
  int prior_depth = 4;
  /// Actions are divided by this inside the networks, so the decoder works in units where the bound is 1.
  float action_scale = env::kMaxStep;
};

/// Encoder q(z|segment), codebook, state-conditioned decoder pi_l(s, z_q) and
/// soft-tree skill prior p(k|s).
struct SkillModel {
  SkillModelConfig config;
  Mlp encoder;    ///< h*(S+A) -> hidden -> hidden -> D
  Param codebook; ///< K × D
  Mlp decoder;    ///< S+D -> hidden -> hidden -> A
  sdt::SoftTree prior;

  SkillModel() = default;
  SkillModel(const SkillModelConfig& config, std::uint64_t seed);

  int num_skills() const noexcept { return config.num_skills; }
  int embed_dim() const noexcept { return config.embed_dim; }
  int segment_length() const noexcept { return config.segment_length; }
  std::span<const float> embedding(int k) const { return codebook.value.row_span(k); }

  std::vector<Param*> trainable_params();
};

struct QuantizeResult {
  int index = 0;                ///< 0-based; ties go to the smallest index
  std::vector<float> embedding; ///< z_q = codebook row `index`
  double distance = 0.0;        ///< Euclidean distance to z_e
};

/// Nearest codebook row to z_e. Throws NumericFault for non-finite z_e.
QuantizeResult quantize(const Tensor& codebook, std::span<const float> z_e);
int nearest_code(const Tensor& codebook, std::span<const double> z_e);

/// h consecutive steps of one trajectory.
struct Segment {
  std::vector<env::Observation> states;
  std::vector<env::Action> actions;
};

Segment make_segment(const env::Trajectory& traj, std::size_t start, int h);

/// Network inputs for a batch of segments.
struct SegmentBatch {
  Tensor encoder_input;  ///< B × h(S+A), actions scaled by 1/action_scale
  Tensor step_states;    ///< B·h × S
  Tensor step_actions;   ///< B·h × A, scaled by 1/action_scale
  Tensor first_states;   ///< B × S
  int size = 0;
};

SegmentBatch make_batch(const SkillModel& model, std::span<const Segment> segments);

struct VqLossComponents {
  double total = 0.0;
  double reconstruction = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double prior = 0.0;
};

/// Values that the stop-gradient operator freezes. Supplying them turns the
/// loss into an ordinary smooth function whose true derivative equals the
/// straight-through gradient, which is what finite differences can check.
template <class T>
struct StopValues {
  std::vector<int> indices;
  Matrix<T> z_e;  ///< B × D
  Matrix<T> z_q;  ///< B × D
};

template <class T>
struct VqGraph {
  Var total, reconstruction, codebook, commitment, prior;
  Var z_e, z_q;
  std::vector<int> indices;
};

/// Batch-mean of
///   sum_t ||pi_l(s_t, z_q) - a_t||^2 + ||sg[z_e] - e||^2 + beta ||z_e - sg[e]||^2 - log p(k*|s_first)
/// with the reconstruction measured in scaled action units.
template <class T>
VqGraph<T> vq_loss_graph(Graph<T>& g, const SkillModel& model, const SegmentBatch& batch, float beta,
                         const StopValues<T>* frozen = nullptr);

VqLossComponents vq_loss(const SkillModel& model, const Segment& segment, float beta);

/// Encoder output for one segment.
std::vector<float> encode(const SkillModel& model, const Segment& segment);

/// Prior mixture p(.|s).
std::vector<double> prior_predict(const SkillModel& model, std::span<const float> s);

/// Decoder action for (s, z_q), scaled back to environment units and clipped.
env::Action low_level_action(const SkillModel& model, std::span<const float> s, std::span<const float> z_q);

}  // namespace skilltree::skillvq
