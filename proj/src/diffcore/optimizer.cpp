#include "skilltree/diffcore/optimizer.hpp"

#include <cmath>

namespace skilltree::diffcore {

Optimizer::Optimizer(std::vector<Param*> params, OptimizerSettings settings)
    : params_(std::move(params)), settings_(settings) {
  require(settings_.learning_rate > 0.0f, "learning rate must be positive");
  for (const Param* p : params_) {
    require(p != nullptr, "null parameter");
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void Optimizer::step(const Gradients<float>& grads) {
  std::vector<const Tensor*> g(params_.size(), nullptr);
  for (size_t i = 0; i < params_.size(); ++i) {
    g[i] = grads.find(*params_[i]);
    if (!g[i]) continue;
    require(g[i]->same_shape(params_[i]->value), "gradient shape differs from parameter '" + params_[i]->name + "'");
    if (!all_finite(std::span<const float>(g[i]->data)))
      throw NumericFault("non-finite gradient for parameter '" + params_[i]->name + "'");
  }

  ++t_;
  const float lr = settings_.learning_rate;
  if (settings_.kind == OptimizerKind::sgd) {
    for (size_t i = 0; i < params_.size(); ++i) {
      if (!g[i]) continue;
      auto& p = params_[i]->value.data;
      for (size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[i]->data[j];
    }
    return;
  }

  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const float c1 = static_cast<float>(1.0 - std::pow(b1, static_cast<double>(t_)));
  const float c2 = static_cast<float>(1.0 - std::pow(b2, static_cast<double>(t_)));
  for (size_t i = 0; i < params_.size(); ++i) {
    if (!g[i]) continue;
    auto& p = params_[i]->value.data;
    auto& m = m_[i].data;
    auto& v = v_[i].data;
    for (size_t j = 0; j < p.size(); ++j) {
      const float gj = g[i]->data[j];
      m[j] = settings_.beta1 * m[j] + (1.0f - settings_.beta1) * gj;
      v[j] = settings_.beta2 * v[j] + (1.0f - settings_.beta2) * gj * gj;
      const float mhat = m[j] / c1;
      const float vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + settings_.epsilon);
    }
  }
}

}  // namespace skilltree::diffcore
