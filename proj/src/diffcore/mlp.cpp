#include "skilltree/diffcore/mlp.hpp"

#include <Eigen/Core>
#include <cmath>

namespace skilltree::diffcore {

Mlp::Mlp(const std::string& name, int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng) {
  require(input_dim > 0 && output_dim > 0, "mlp dimensions must be positive");
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    require(dims[l + 1] > 0, "mlp hidden width must be positive");
    const float bound = 1.0f / std::sqrt(static_cast<float>(dims[l]));
    Param w{name + ".w" + std::to_string(l), Tensor(dims[l], dims[l + 1])};
    Param b{name + ".b" + std::to_string(l), Tensor(1, dims[l + 1])};
    fill_uniform(w.value, bound, rng);
    fill_uniform(b.value, bound, rng);
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  }
}

int Mlp::input_dim() const { return params_.empty() ? 0 : params_.front().value.rows; }
int Mlp::output_dim() const { return params_.empty() ? 0 : params_.back().value.cols; }

std::vector<Param*> Mlp::param_ptrs() {
  std::vector<Param*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <class T>
Var Mlp::forward(Graph<T>& g, Var x, bool trainable) const {
  const size_t layers = params_.size() / 2;
  Var h = x;
  for (size_t l = 0; l < layers; ++l) {
    const Param& w = params_[2 * l];
    const Param& b = params_[2 * l + 1];
    const Var wv = trainable ? g.param(w) : g.constant(w.value);
    const Var bv = trainable ? g.param(b) : g.constant(b.value);
    h = g.add(g.matmul(h, wv), bv);
    if (l + 1 < layers) h = g.tanh(h);
  }
  return h;
}

template Var Mlp::forward<float>(Graph<float>&, Var, bool) const;
template Var Mlp::forward<double>(Graph<double>&, Var, bool) const;

Tensor Mlp::forward(const Tensor& x) const {
  using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  require(x.cols == input_dim(), "mlp input width mismatch");
  RowMat h = Eigen::Map<const RowMat>(x.data.data(), x.rows, x.cols);
  const size_t layers = params_.size() / 2;
  for (size_t l = 0; l < layers; ++l) {
    const Tensor& w = params_[2 * l].value;
    const Tensor& b = params_[2 * l + 1].value;
    RowMat next = h * Eigen::Map<const RowMat>(w.data.data(), w.rows, w.cols);
    next.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b.data.data(), b.cols);
    if (l + 1 < layers) next = next.array().tanh();
    h = std::move(next);
  }
  Tensor out(static_cast<int>(h.rows()), static_cast<int>(h.cols()));
  Eigen::Map<RowMat>(out.data.data(), out.rows, out.cols) = h;
  return out;
}

}  // namespace skilltree::diffcore
