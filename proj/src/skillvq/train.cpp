#include "skilltree/skillvq/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "skilltree/diffcore/optimizer.hpp"

namespace skilltree::skillvq {

std::vector<std::pair<std::size_t, std::size_t>> segment_windows(const env::Dataset& data,
                                                                 std::span<const std::size_t> trajectories, int h) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t n : trajectories) {
    const std::size_t len = data.at(n).length();
    if (len < static_cast<std::size_t>(h)) continue;
    for (std::size_t start = 0; start + static_cast<std::size_t>(h) <= len; ++start) out.emplace_back(n, start);
  }
  return out;
}

HeldoutMetrics evaluate_segments(const SkillModel& model, const env::Dataset& data,
                                 std::span<const std::size_t> trajectories) {
  const int h = model.segment_length();
  const auto windows = segment_windows(data, trajectories, h);
  HeldoutMetrics m;
  m.code_usage.assign(static_cast<size_t>(model.num_skills()), 0);
  if (windows.empty()) return m;

  double sq_error = 0.0;
  long long elements = 0;
  long long agree = 0;
  constexpr std::size_t kChunk = 512;
  for (std::size_t begin = 0; begin < windows.size(); begin += kChunk) {
    const std::size_t end = std::min(windows.size(), begin + kChunk);
    std::vector<Segment> segs;
    for (std::size_t i = begin; i < end; ++i) segs.push_back(make_segment(data[windows[i].first], windows[i].second, h));
    const SegmentBatch batch = make_batch(model, segs);
    const Tensor z = model.encoder.forward(batch.encoder_input);
    const int b = batch.size;
    const int d = model.embed_dim();
    Tensor dec_in(b * h, env::kObsDim + d);
    std::vector<int> codes(static_cast<size_t>(b));
    std::vector<double> row(static_cast<size_t>(d));
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < d; ++j) row[static_cast<size_t>(j)] = z(i, j);
      codes[static_cast<size_t>(i)] = nearest_code(model.codebook.value, row);
      ++m.code_usage[static_cast<size_t>(codes[static_cast<size_t>(i)])];
      const auto e = model.embedding(codes[static_cast<size_t>(i)]);
      for (int t = 0; t < h; ++t) {
        auto r = dec_in.row_span(i * h + t);
        auto s = batch.step_states.row_span(i * h + t);
        std::copy(s.begin(), s.end(), r.begin());
        std::copy(e.begin(), e.end(), r.begin() + env::kObsDim);
      }
      const auto p = model.prior.forward(batch.first_states.row_span(i)).distribution;
      const int top = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
      if (top == codes[static_cast<size_t>(i)]) ++agree;
    }
    const Tensor act = model.decoder.forward(dec_in);
    const float scale = model.config.action_scale;
    for (int r = 0; r < act.rows; ++r) {
      for (int c = 0; c < act.cols; ++c) {
        const double predicted = std::clamp(act(r, c) * scale, -env::kMaxStep, env::kMaxStep);
        const double target = static_cast<double>(batch.step_actions(r, c)) * scale;
        sq_error += (predicted - target) * (predicted - target);
        ++elements;
      }
    }
  }
  m.segments = static_cast<int>(windows.size());
  m.mse = sq_error / static_cast<double>(elements);
  m.prior_agreement = static_cast<double>(agree) / static_cast<double>(windows.size());
  return m;
}

SkillTrainResult train_skills(const env::Dataset& data, const SkillTrainConfig& cfg) {
  require(!data.empty(), "train_skills: empty dataset");
  require(cfg.epochs >= 0, "train_skills: epochs must be >= 0");
  require(cfg.batch >= 1, "train_skills: batch must be >= 1");
  require(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0, "train_skills: holdout fraction must be in [0, 1)");
  const int h = cfg.model.segment_length;

  std::vector<std::size_t> eligible;
  for (std::size_t n = 0; n < data.size(); ++n)
    if (data[n].length() >= static_cast<std::size_t>(h)) eligible.push_back(n);
  require(!eligible.empty(), "train_skills: every trajectory is shorter than h");

  Rng rng(cfg.seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::size_t n_holdout = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * static_cast<double>(eligible.size())));
  if (n_holdout >= eligible.size()) n_holdout = eligible.size() - 1;
  std::vector<std::size_t> heldout(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  std::vector<std::size_t> train(eligible.begin() + static_cast<std::ptrdiff_t>(n_holdout), eligible.end());
  std::sort(heldout.begin(), heldout.end());
  std::sort(train.begin(), train.end());
  const auto windows = segment_windows(data, train, h);

  SkillTrainResult result;
  result.heldout_trajectories = heldout;
  result.model = SkillModel(cfg.model, rng());
  SkillModel& model = result.model;
  diffcore::Optimizer opt(model.trainable_params(), {diffcore::OptimizerKind::adam, cfg.learning_rate});

  const int K = model.num_skills();
  const int D = model.embed_dim();
  const int steps_per_epoch = static_cast<int>((windows.size() + static_cast<size_t>(cfg.batch) - 1) / static_cast<size_t>(cfg.batch));
  const int reset_epochs = static_cast<int>(std::floor(cfg.dead_code_reset_fraction * cfg.epochs));
  std::uniform_int_distribution<std::size_t> pick(0, windows.size() - 1);
  constexpr std::size_t kReservoir = 512;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch + 1;
    std::vector<long long> usage(static_cast<size_t>(K), 0);
    std::vector<std::vector<float>> reservoir;
    long long seen = 0;

    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<Segment> segs;
      segs.reserve(static_cast<size_t>(cfg.batch));
      for (int i = 0; i < cfg.batch; ++i) {
        const auto& w = windows[pick(rng)];
        segs.push_back(make_segment(data[w.first], w.second, h));
      }
      const SegmentBatch batch = make_batch(model, segs);
      Graph<float> g;
      const auto loss = vq_loss_graph(g, model, batch, cfg.beta);
      const auto grads = g.backward(loss.total);
      stats.total += g.scalar(loss.total);
      stats.reconstruction += g.scalar(loss.reconstruction);
      stats.codebook += g.scalar(loss.codebook);
      stats.commitment += g.scalar(loss.commitment);
      stats.prior += g.scalar(loss.prior);

      const Tensor& z_e = g.value(loss.z_e);
      for (int i = 0; i < batch.size; ++i) {
        ++usage[static_cast<size_t>(loss.indices[static_cast<size_t>(i)])];
        auto row = z_e.row_span(i);
        ++seen;
        if (reservoir.size() < kReservoir) {
          reservoir.emplace_back(row.begin(), row.end());
        } else {
          const auto slot = std::uniform_int_distribution<long long>(0, seen - 1)(rng);
          if (slot < static_cast<long long>(kReservoir)) reservoir[static_cast<size_t>(slot)].assign(row.begin(), row.end());
        }
      }
      opt.step(grads);
    }

    if (steps_per_epoch > 0) {
      const double inv = 1.0 / steps_per_epoch;
      stats.total *= inv;
      stats.reconstruction *= inv;
      stats.codebook *= inv;
      stats.commitment *= inv;
      stats.prior *= inv;
    }
    stats.codes_used = static_cast<int>(std::count_if(usage.begin(), usage.end(), [](long long u) { return u > 0; }));
    if (epoch < reset_epochs && !reservoir.empty()) {
      std::uniform_int_distribution<std::size_t> pick_z(0, reservoir.size() - 1);
      for (int k = 0; k < K; ++k) {
        if (usage[static_cast<size_t>(k)] > 0) continue;
        const auto& z = reservoir[pick_z(rng)];
        std::copy(z.begin(), z.begin() + D, model.codebook.value.row_span(k).begin());
        ++stats.codes_reset;
      }
    }
    const auto held = evaluate_segments(model, data, heldout.empty() ? std::span<const std::size_t>(train)
                                                                     : std::span<const std::size_t>(heldout));
    stats.heldout_mse = held.mse;
    stats.heldout_prior_agreement = held.prior_agreement;
    result.curve.push_back(stats);
  }
  std::ostringstream state;
  state << rng;
  result.rng_state = state.str();
  return result;
}

}  // namespace skilltree::skillvq
