#include "skilltree/skillvq/skill_model.hpp"

#include <cmath>
#include <limits>

namespace skilltree::skillvq {

namespace {

constexpr int S = env::kObsDim;
constexpr int A = env::kActDim;

}  // namespace

SkillModel::SkillModel(const SkillModelConfig& cfg, std::uint64_t seed) : config(cfg) {
  require(cfg.segment_length >= 1, "segment length h must be >= 1");
  require(cfg.num_skills >= 2, "codebook needs K >= 2");
  require(cfg.embed_dim >= 1, "embedding dimension D must be >= 1");
  require(cfg.hidden >= 1, "hidden width must be >= 1");
  require(cfg.action_scale > 0.0f, "action scale must be positive");
  Rng rng(seed);
  encoder = Mlp("encoder", cfg.segment_length * (S + A), {cfg.hidden, cfg.hidden}, cfg.embed_dim, rng);
  codebook = Param{"codebook", Tensor(cfg.num_skills, cfg.embed_dim)};
  diffcore::fill_uniform(codebook.value, 1.0f / static_cast<float>(cfg.num_skills), rng);
  decoder = Mlp("decoder", S + cfg.embed_dim, {cfg.hidden, cfg.hidden}, A, rng);
  prior = sdt::SoftTree(cfg.prior_depth, S, cfg.num_skills, rng());
}

std::vector<Param*> SkillModel::trainable_params() {
  std::vector<Param*> out = encoder.param_ptrs();
  out.push_back(&codebook);
  for (Param* p : decoder.param_ptrs()) out.push_back(p);
  for (Param* p : prior.param_ptrs()) out.push_back(p);
  return out;
}

int nearest_code(const Tensor& codebook, std::span<const double> z_e) {
  require(static_cast<int>(z_e.size()) == codebook.cols, "z_e length differs from embedding dimension");
  if (!diffcore::all_finite(z_e)) throw NumericFault("quantize: non-finite encoder output");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < codebook.rows; ++k) {
    double d = 0.0;
    for (int j = 0; j < codebook.cols; ++j) {
      const double diff = z_e[static_cast<size_t>(j)] - static_cast<double>(codebook(k, j));
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

QuantizeResult quantize(const Tensor& codebook, std::span<const float> z_e) {
  std::vector<double> z(z_e.begin(), z_e.end());
  QuantizeResult r;
  r.index = nearest_code(codebook, z);
  auto row = codebook.row_span(r.index);
  r.embedding.assign(row.begin(), row.end());
  double d = 0.0;
  for (size_t j = 0; j < z.size(); ++j) d += (z[j] - row[j]) * (z[j] - row[j]);
  r.distance = std::sqrt(d);
  return r;
}

Segment make_segment(const env::Trajectory& traj, std::size_t start, int h) {
  require(h >= 1 && start + static_cast<size_t>(h) <= traj.length(), "segment does not fit in trajectory");
  Segment s;
  for (size_t t = start; t < start + static_cast<size_t>(h); ++t) {
    s.states.push_back(traj.steps[t].obs);
    s.actions.push_back(traj.steps[t].action);
  }
  return s;
}

SegmentBatch make_batch(const SkillModel& model, std::span<const Segment> segments) {
  const int h = model.segment_length();
  const int b = static_cast<int>(segments.size());
  const float inv = 1.0f / model.config.action_scale;
  SegmentBatch out;
  out.size = b;
  out.encoder_input = Tensor(b, h * (S + A));
  out.step_states = Tensor(b * h, S);
  out.step_actions = Tensor(b * h, A);
  out.first_states = Tensor(b, S);
  for (int i = 0; i < b; ++i) {
    const Segment& seg = segments[static_cast<size_t>(i)];
    require(static_cast<int>(seg.states.size()) == h && static_cast<int>(seg.actions.size()) == h,
            "segment length differs from model h");
    auto enc = out.encoder_input.row_span(i);
    for (int t = 0; t < h; ++t) {
      const auto& st = seg.states[static_cast<size_t>(t)];
      const auto& at = seg.actions[static_cast<size_t>(t)];
      for (int f = 0; f < S; ++f) {
        enc[static_cast<size_t>(t * (S + A) + f)] = st[static_cast<size_t>(f)];
        out.step_states(i * h + t, f) = st[static_cast<size_t>(f)];
      }
      for (int f = 0; f < A; ++f) {
        enc[static_cast<size_t>(t * (S + A) + S + f)] = at[static_cast<size_t>(f)] * inv;
        out.step_actions(i * h + t, f) = at[static_cast<size_t>(f)] * inv;
      }
    }
    for (int f = 0; f < S; ++f) out.first_states(i, f) = seg.states[0][static_cast<size_t>(f)];
  }
  return out;
}

template <class T>
VqGraph<T> vq_loss_graph(Graph<T>& g, const SkillModel& model, const SegmentBatch& batch, float beta,
                         const StopValues<T>* frozen) {
  require(beta > 0.0f, "commitment weight beta must be positive");
  require(batch.size > 0, "empty segment batch");
  require(batch.encoder_input.cols == model.encoder.input_dim(), "segment length differs from model h");
  const int b = batch.size;
  const int h = model.segment_length();
  const int d = model.embed_dim();

  VqGraph<T> out;
  out.z_e = model.encoder.forward(g, g.constant(batch.encoder_input));
  const Matrix<T>& z_e = g.value(out.z_e);

  if (frozen) {
    require(static_cast<int>(frozen->indices.size()) == b, "frozen stop values do not match batch");
    out.indices = frozen->indices;
  } else {
    out.indices.resize(static_cast<size_t>(b));
    std::vector<double> row(static_cast<size_t>(d));
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < d; ++j) row[static_cast<size_t>(j)] = static_cast<double>(z_e(i, j));
      out.indices[static_cast<size_t>(i)] = nearest_code(model.codebook.value, row);
    }
  }

  const Var e = g.gather_rows(g.param(model.codebook), out.indices);
  Var sg_z_e;
  Var sg_e;
  if (frozen) {
    sg_z_e = g.input(frozen->z_e);
    sg_e = g.input(frozen->z_q);
    Matrix<T> offset(b, d);
    for (size_t i = 0; i < offset.size(); ++i) offset.data[i] = frozen->z_q.data[i] - frozen->z_e.data[i];
    out.z_q = g.add(out.z_e, g.input(std::move(offset)));
  } else {
    sg_z_e = g.detach(out.z_e);
    sg_e = g.detach(e);
    out.z_q = g.straight_through(out.z_e, g.value(e));
  }

  std::vector<int> repeat(static_cast<size_t>(b * h));
  for (int i = 0; i < b * h; ++i) repeat[static_cast<size_t>(i)] = i / h;
  const Var dec_in = g.concat_cols(g.constant(batch.step_states), g.gather_rows(out.z_q, std::move(repeat)));
  const Var actions = model.decoder.forward(g, dec_in);

  out.reconstruction = g.scale(g.mse(actions, g.constant(batch.step_actions)), static_cast<T>(h * A));
  out.codebook = g.scale(g.mse(sg_z_e, e), static_cast<T>(d));
  out.commitment = g.scale(g.mse(out.z_e, sg_e), static_cast<T>(beta) * static_cast<T>(d));

  const Var prior = model.prior.forward(g, g.constant(batch.first_states)).distribution;
  Matrix<T> onehot(b, model.num_skills());
  for (int i = 0; i < b; ++i) onehot(i, out.indices[static_cast<size_t>(i)]) = T(1);
  out.prior = g.scale(g.sum(g.mul(g.log(prior), g.input(std::move(onehot)))), T(-1) / static_cast<T>(b));

  out.total = g.add(g.add(out.reconstruction, out.codebook), g.add(out.commitment, out.prior));
  return out;
}

template VqGraph<float> vq_loss_graph<float>(Graph<float>&, const SkillModel&, const SegmentBatch&, float,
                                             const StopValues<float>*);
template VqGraph<double> vq_loss_graph<double>(Graph<double>&, const SkillModel&, const SegmentBatch&, float,
                                               const StopValues<double>*);

VqLossComponents vq_loss(const SkillModel& model, const Segment& segment, float beta) {
  require(static_cast<int>(segment.states.size()) == model.segment_length(), "segment length differs from model h");
  Graph<double> g;
  const auto batch = make_batch(model, std::span<const Segment>(&segment, 1));
  const auto v = vq_loss_graph(g, model, batch, beta);
  return {g.scalar(v.total), g.scalar(v.reconstruction), g.scalar(v.codebook), g.scalar(v.commitment),
          g.scalar(v.prior)};
}

std::vector<float> encode(const SkillModel& model, const Segment& segment) {
  const auto batch = make_batch(model, std::span<const Segment>(&segment, 1));
  const Tensor z = model.encoder.forward(batch.encoder_input);
  return z.data;
}

std::vector<double> prior_predict(const SkillModel& model, std::span<const float> s) {
  require(static_cast<int>(s.size()) == model.prior.obs_dim(), "prior_predict: state has wrong dimension");
  return model.prior.forward(s).distribution;
}

env::Action low_level_action(const SkillModel& model, std::span<const float> s, std::span<const float> z_q) {
  require(static_cast<int>(s.size()) == S, "low_level_action: state has wrong dimension");
  require(static_cast<int>(z_q.size()) == model.embed_dim(), "low_level_action: embedding has wrong dimension");
  if (!diffcore::all_finite(s) || !diffcore::all_finite(z_q)) throw NumericFault("low_level_action: non-finite input");
  Tensor in(1, S + model.embed_dim());
  std::copy(s.begin(), s.end(), in.data.begin());
  std::copy(z_q.begin(), z_q.end(), in.data.begin() + S);
  const Tensor out = model.decoder.forward(in);
  if (!diffcore::all_finite(std::span<const float>(out.data))) throw NumericFault("low_level_action: non-finite decoder output");
  return env::clip_action({out.data[0] * model.config.action_scale, out.data[1] * model.config.action_scale});
}

}  // namespace skilltree::skillvq
