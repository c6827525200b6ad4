#include "skilltree/sdt/soft_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace skilltree::sdt {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const float> logits) {
  const float mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace

double DecisionPath::probability() const {
  double p = 1.0;
  for (const auto& s : steps) p *= s.probability;
  return p;
}

int DecisionPath::skill() const {
  return static_cast<int>(std::max_element(leaf_distribution.begin(), leaf_distribution.end()) -
                          leaf_distribution.begin());
}

SoftTree::SoftTree(int depth, int obs_dim, int num_skills, std::uint64_t seed)
    : depth_(depth), obs_dim_(obs_dim), num_skills_(num_skills) {
  require(depth >= 1 && depth <= 16, "soft tree depth must be in [1, 16]");
  require(obs_dim >= 1, "soft tree obs_dim must be >= 1");
  require(num_skills >= 2, "soft tree needs at least 2 output categories");
  Rng rng(seed);
  weights_ = Param{"weights", diffcore::Tensor(obs_dim, num_inner())};
  biases_ = Param{"biases", diffcore::Tensor(1, num_inner())};
  leaf_logits_ = Param{"leaf_logits", diffcore::Tensor(num_leaves(), num_skills)};
  diffcore::fill_uniform(weights_.value, 1.0f / std::sqrt(static_cast<float>(obs_dim)), rng);
}

void SoftTree::check_input(std::span<const float> x) const {
  require(static_cast<int>(x.size()) == obs_dim_, "soft tree input has wrong dimension");
  if (!diffcore::all_finite(x)) throw NumericFault("soft tree input is not finite");
}

std::vector<double> SoftTree::gate_probabilities(std::span<const float> x) const {
  check_input(x);
  std::vector<double> gates(static_cast<size_t>(num_inner()));
  for (int u = 0; u < num_inner(); ++u) {
    double z = biases_.value.data[static_cast<size_t>(u)];
    for (int f = 0; f < obs_dim_; ++f) z += static_cast<double>(weights_.value(f, u)) * x[static_cast<size_t>(f)];
    gates[static_cast<size_t>(u)] = sigmoid(z);
  }
  return gates;
}

std::vector<double> SoftTree::leaf_distribution(int leaf) const {
  require(leaf >= 0 && leaf < num_leaves(), "leaf index out of range");
  return softmax(leaf_logits_.value.row_span(leaf));
}

TreeOutput SoftTree::forward(std::span<const float> x) const {
  const auto gates = gate_probabilities(x);
  std::vector<double> paths{1.0};
  for (int layer = 0; layer < depth_; ++layer) {
    const int width = 1 << layer;
    std::vector<double> next(static_cast<size_t>(2 * width));
    for (int j = 0; j < width; ++j) {
      const double g = gates[static_cast<size_t>(width - 1 + j)];
      next[static_cast<size_t>(2 * j)] = paths[static_cast<size_t>(j)] * g;
      next[static_cast<size_t>(2 * j + 1)] = paths[static_cast<size_t>(j)] * (1.0 - g);
    }
    paths = std::move(next);
  }
  TreeOutput out;
  out.distribution.assign(static_cast<size_t>(num_skills_), 0.0);
  for (int leaf = 0; leaf < num_leaves(); ++leaf) {
    const auto dist = leaf_distribution(leaf);
    for (int k = 0; k < num_skills_; ++k) out.distribution[static_cast<size_t>(k)] += paths[static_cast<size_t>(leaf)] * dist[static_cast<size_t>(k)];
  }
  out.path_probabilities = std::move(paths);
  return out;
}

DecisionPath SoftTree::greedy_path(std::span<const float> x) const {
  const auto gates = gate_probabilities(x);
  DecisionPath path;
  int position = 0;
  for (int layer = 0; layer < depth_; ++layer) {
    const int u = (1 << layer) - 1 + position;
    const double left = gates[static_cast<size_t>(u)];
    PathStep step;
    step.node = u;
    step.branch = left >= 0.5 ? Branch::left : Branch::right;
    step.probability = step.branch == Branch::left ? left : 1.0 - left;
    step.weights.resize(static_cast<size_t>(obs_dim_));
    for (int f = 0; f < obs_dim_; ++f) step.weights[static_cast<size_t>(f)] = weights_.value(f, u);
    step.bias = biases_.value.data[static_cast<size_t>(u)];
    path.steps.push_back(std::move(step));
    position = 2 * position + (path.steps.back().branch == Branch::left ? 0 : 1);
  }
  path.leaf = position;
  path.leaf_distribution = leaf_distribution(position);
  return path;
}

int SoftTree::sample(std::span<const float> x, Rng& rng) const {
  const auto dist = forward(x).distribution;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (size_t k = 0; k < dist.size(); ++k) {
    if (dist[k] <= 0.0) continue;
    last_positive = static_cast<int>(k);
    acc += dist[k];
    if (u < acc) return static_cast<int>(k);
  }
  return last_positive;
}

template <class T>
SoftTree::GraphOutput SoftTree::forward(Graph<T>& g, Var x, bool trainable) const {
  require(g.value(x).cols == obs_dim_, "soft tree input has wrong dimension");
  const int batch = g.value(x).rows;
  const Var w = trainable ? g.param(weights_) : g.constant(weights_.value);
  const Var b = trainable ? g.param(biases_) : g.constant(biases_.value);
  const Var logits = trainable ? g.param(leaf_logits_) : g.constant(leaf_logits_.value);

  const Var gates = g.sigmoid(g.add(g.matmul(x, w), b));  // B × inner
  Var paths = g.input(diffcore::Matrix<T>(batch, 1, T(1)));
  for (int layer = 0; layer < depth_; ++layer) {
    const int width = 1 << layer;
    std::vector<int> cols(static_cast<size_t>(width));
    std::iota(cols.begin(), cols.end(), width - 1);
    const Var layer_gates = g.gather_cols(gates, cols);
    const Var left = g.mul(paths, layer_gates);
    const Var right = g.sub(paths, left);
    std::vector<int> interleave(static_cast<size_t>(2 * width));
    for (int j = 0; j < width; ++j) {
      interleave[static_cast<size_t>(2 * j)] = j;
      interleave[static_cast<size_t>(2 * j + 1)] = width + j;
    }
    paths = g.gather_cols(g.concat_cols(left, right), std::move(interleave));
  }
  const Var distribution = g.matmul(paths, g.softmax(logits));
  return {distribution, paths};
}

template SoftTree::GraphOutput SoftTree::forward<float>(Graph<float>&, Var, bool) const;
template SoftTree::GraphOutput SoftTree::forward<double>(Graph<double>&, Var, bool) const;

bool SoftTree::operator==(const SoftTree& o) const {
  return depth_ == o.depth_ && obs_dim_ == o.obs_dim_ && num_skills_ == o.num_skills_ &&
         weights_.value == o.weights_.value && biases_.value == o.biases_.value &&
         leaf_logits_.value == o.leaf_logits_.value;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "kl_divergence: distributions differ in length");
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * (std::log(p[i]) - std::log(std::max(q[i], 1e-12)));
  }
  return std::max(kl, 0.0);
}

double sdt_kl(const SoftTree& a, const SoftTree& b, std::span<const float> x) {
  require(a.num_skills() == b.num_skills() && a.obs_dim() == b.obs_dim(), "sdt_kl: trees are not comparable");
  const auto pa = a.forward(x).distribution;
  const auto pb = b.forward(x).distribution;
  return kl_divergence(pa, pb);
}

template <class T>
Var kl_rows(Graph<T>& g, Var p, Var q) {
  return g.sum_rows(g.mul(p, g.sub(g.log(p), g.log(q))));
}

template Var kl_rows<float>(Graph<float>&, Var, Var);
template Var kl_rows<double>(Graph<double>&, Var, Var);

}  // namespace skilltree::sdt
