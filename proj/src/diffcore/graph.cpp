#include "skilltree/diffcore/graph.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace skilltree::diffcore {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<RowMat<T>> view(Matrix<T>& m) {
  return {m.data.data(), m.rows, m.cols};
}

template <class T>
Eigen::Map<const RowMat<T>> view(const Matrix<T>& m) {
  return {m.data.data(), m.rows, m.cols};
}

enum class Broadcast { same, row, col, scalar };

template <class T>
Broadcast broadcast_kind(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.same_shape(b)) return Broadcast::same;
  if (b.rows == 1 && b.cols == 1) return Broadcast::scalar;
  if (b.rows == 1 && b.cols == a.cols) return Broadcast::row;
  if (b.cols == 1 && b.rows == a.rows) return Broadcast::col;
  throw ContractViolation("incompatible shapes " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                          " and " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

template <class T>
T at_broadcast(const Matrix<T>& b, Broadcast k, int r, int c) {
  switch (k) {
    case Broadcast::same:
      return b(r, c);
    case Broadcast::row:
      return b.data[static_cast<size_t>(c)];
    case Broadcast::col:
      return b.data[static_cast<size_t>(r)];
    case Broadcast::scalar:
      return b.data[0];
  }
  return T(0);
}

template <class T>
T& at_broadcast(Matrix<T>& b, Broadcast k, int r, int c) {
  switch (k) {
    case Broadcast::same:
      return b(r, c);
    case Broadcast::row:
      return b.data[static_cast<size_t>(c)];
    case Broadcast::col:
      return b.data[static_cast<size_t>(r)];
    case Broadcast::scalar:
      break;
  }
  return b.data[0];
}

template <class T>
T stable_sigmoid(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

constexpr double kLogFloor = 1e-12;

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::input: return "input";
    case Op::param: return "param";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::matmul: return "matmul";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh: return "tanh";
    case Op::softmax: return "softmax";
    case Op::log: return "log";
    case Op::sum: return "sum";
    case Op::sum_rows: return "sum_rows";
    case Op::mean: return "mean";
    case Op::mse: return "mse";
    case Op::gather_rows: return "gather_rows";
    case Op::gather_cols: return "gather_cols";
    case Op::concat_cols: return "concat_cols";
    case Op::scale: return "scale";
    case Op::reshape: return "reshape";
    case Op::straight_through: return "straight_through";
  }
  return "?";
}

template <class T>
const Matrix<T>* Gradients<T>::find(const Param& p) const {
  for (const auto& [param, grad] : entries_)
    if (param == &p) return &grad;
  return nullptr;
}

template <class T>
Matrix<T> Gradients<T>::of(const Param& p) const {
  if (const auto* g = find(p)) return *g;
  return Matrix<T>(p.value.rows, p.value.cols);
}

template <class T>
Var Graph<T>::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <class T>
const typename Graph<T>::Node& Graph<T>::node(Var v) const {
  require(v.id >= 0 && static_cast<size_t>(v.id) < nodes_.size(), "Var does not belong to this graph");
  return nodes_[static_cast<size_t>(v.id)];
}

template <class T>
T Graph<T>::scalar(Var v) const {
  const auto& n = node(v);
  require(n.value.size() == 1, "scalar() on a non-scalar node");
  return n.value.data[0];
}

template <class T>
Var Graph<T>::input(Matrix<T> value) {
  Node n;
  n.op = Op::input;
  n.value = std::move(value);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::constant(const Tensor& value) {
  if constexpr (std::is_same_v<T, float>) {
    return input(value);
  } else {
    return input(value.template cast<T>());
  }
}

template <class T>
Var Graph<T>::param(const Param& p) {
  for (const auto& [param, id] : params_)
    if (param == &p) return Var{id};
  Node n;
  n.op = Op::param;
  n.needs_grad = true;
  n.param = &p;
  if constexpr (std::is_same_v<T, float>) {
    n.value = p.value;
  } else {
    n.value = p.value.template cast<T>();
  }
  Var v = push(std::move(n));
  params_.emplace_back(&p, v.id);
  return v;
}

template <class T>
Var Graph<T>::binary(Op op, Var a, Var b) {
  const auto& na = node(a);
  const auto& nb = node(b);
  const Broadcast k = broadcast_kind(na.value, nb.value);
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = Matrix<T>(na.value.rows, na.value.cols);
  for (int r = 0; r < na.value.rows; ++r) {
    for (int c = 0; c < na.value.cols; ++c) {
      const T x = na.value(r, c);
      const T y = at_broadcast(nb.value, k, r, c);
      n.value(r, c) = op == Op::add ? x + y : op == Op::sub ? x - y : x * y;
    }
  }
  return push(std::move(n));
}

template <class T>
Var Graph<T>::add(Var a, Var b) {
  return binary(Op::add, a, b);
}

template <class T>
Var Graph<T>::sub(Var a, Var b) {
  return binary(Op::sub, a, b);
}

template <class T>
Var Graph<T>::mul(Var a, Var b) {
  return binary(Op::mul, a, b);
}

template <class T>
Var Graph<T>::matmul(Var a, Var b) {
  const auto& na = node(a);
  const auto& nb = node(b);
  require(na.value.cols == nb.value.rows, "matmul inner dimensions differ");
  Node n;
  n.op = Op::matmul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = Matrix<T>(na.value.rows, nb.value.cols);
  view(n.value).noalias() = view(na.value) * view(nb.value);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::sigmoid(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::sigmoid;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (auto& x : n.value.data) x = stable_sigmoid(x);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::tanh(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::tanh;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (auto& x : n.value.data) x = std::tanh(x);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::softmax(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::softmax;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (int r = 0; r < n.value.rows; ++r) {
    auto row = n.value.row_span(r);
    const T mx = *std::max_element(row.begin(), row.end());
    T total = 0;
    for (auto& x : row) {
      x = std::exp(x - mx);
      total += x;
    }
    for (auto& x : row) x /= total;
  }
  return push(std::move(n));
}

template <class T>
Var Graph<T>::log(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::log;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = na.value;
  for (auto& x : n.value.data) x = std::log(std::max(x, static_cast<T>(kLogFloor)));
  return push(std::move(n));
}

template <class T>
Var Graph<T>::sum(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::sum;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  T total = 0;
  for (T x : na.value.data) total += x;
  n.value = Matrix<T>(1, 1, total);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::sum_rows(Var a) {
  const auto& na = node(a);
  Node n;
  n.op = Op::sum_rows;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = Matrix<T>(na.value.rows, 1);
  for (int r = 0; r < na.value.rows; ++r) {
    T total = 0;
    for (T x : na.value.row_span(r)) total += x;
    n.value.data[static_cast<size_t>(r)] = total;
  }
  return push(std::move(n));
}

template <class T>
Var Graph<T>::mean(Var a) {
  const auto& na = node(a);
  require(na.value.size() > 0, "mean of an empty array");
  Node n;
  n.op = Op::mean;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  T total = 0;
  for (T x : na.value.data) total += x;
  n.value = Matrix<T>(1, 1, total / static_cast<T>(na.value.size()));
  return push(std::move(n));
}

template <class T>
Var Graph<T>::mse(Var a, Var b) {
  const auto& na = node(a);
  const auto& nb = node(b);
  require(na.value.same_shape(nb.value), "mse operands differ in shape");
  require(na.value.size() > 0, "mse of empty arrays");
  Node n;
  n.op = Op::mse;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  T total = 0;
  for (size_t i = 0; i < na.value.size(); ++i) {
    const T d = na.value.data[i] - nb.value.data[i];
    total += d * d;
  }
  n.value = Matrix<T>(1, 1, total / static_cast<T>(na.value.size()));
  return push(std::move(n));
}

template <class T>
Var Graph<T>::gather_rows(Var a, std::vector<int> rows) {
  const auto& na = node(a);
  Node n;
  n.op = Op::gather_rows;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = Matrix<T>(static_cast<int>(rows.size()), na.value.cols);
  for (size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < na.value.rows, "gather_rows index out of range");
    auto src = na.value.row_span(rows[r]);
    std::copy(src.begin(), src.end(), n.value.row_span(static_cast<int>(r)).begin());
  }
  n.index = std::move(rows);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::gather_cols(Var a, std::vector<int> cols) {
  const auto& na = node(a);
  Node n;
  n.op = Op::gather_cols;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = Matrix<T>(na.value.rows, static_cast<int>(cols.size()));
  for (int c : cols) require(c >= 0 && c < na.value.cols, "gather_cols index out of range");
  for (int r = 0; r < na.value.rows; ++r)
    for (size_t c = 0; c < cols.size(); ++c) n.value(r, static_cast<int>(c)) = na.value(r, cols[c]);
  n.index = std::move(cols);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::concat_cols(Var a, Var b) {
  const auto& na = node(a);
  const auto& nb = node(b);
  require(na.value.rows == nb.value.rows, "concat_cols row counts differ");
  Node n;
  n.op = Op::concat_cols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.value = Matrix<T>(na.value.rows, na.value.cols + nb.value.cols);
  for (int r = 0; r < na.value.rows; ++r) {
    auto dst = n.value.row_span(r);
    auto ra = na.value.row_span(r);
    auto rb = nb.value.row_span(r);
    std::copy(ra.begin(), ra.end(), dst.begin());
    std::copy(rb.begin(), rb.end(), dst.begin() + na.value.cols);
  }
  return push(std::move(n));
}

template <class T>
Var Graph<T>::scale(Var a, T factor, T offset) {
  const auto& na = node(a);
  Node n;
  n.op = Op::scale;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.factor = factor;
  n.value = na.value;
  for (auto& x : n.value.data) x = factor * x + offset;
  return push(std::move(n));
}

template <class T>
Var Graph<T>::reshape(Var a, int rows, int cols) {
  const auto& na = node(a);
  require(static_cast<size_t>(rows) * cols == na.value.size(), "reshape changes element count");
  Node n;
  n.op = Op::reshape;
  n.a = a.id;
  n.needs_grad = na.needs_grad;
  n.value = Matrix<T>(rows, cols, na.value.data);
  return push(std::move(n));
}

template <class T>
Var Graph<T>::detach(Var a) {
  return input(node(a).value);
}

template <class T>
Var Graph<T>::straight_through(Var source, Matrix<T> value) {
  const auto& ns = node(source);
  require(ns.value.same_shape(value), "straight_through shapes differ");
  Node n;
  n.op = Op::straight_through;
  n.a = source.id;
  n.needs_grad = ns.needs_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

template <class T>
Gradients<T> Graph<T>::backward(Var loss) {
  require(node(loss).value.size() == 1, "backward() needs a scalar loss");
  for (const auto& n : nodes_) {
    if (!all_finite(std::span<const T>(n.value.data))) {
      throw NumericFault(std::string("non-finite forward value in '") + op_name(n.op) + "' node");
    }
  }
  for (auto& n : nodes_) {
    if (n.needs_grad) n.grad = Matrix<T>(n.value.rows, n.value.cols);
  }
  auto& root = nodes_[static_cast<size_t>(loss.id)];
  if (root.needs_grad) root.grad.data[0] = T(1);

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad || n.op == Op::input || n.op == Op::param) continue;
    const Matrix<T>& g = n.grad;
    Node* pa = n.a >= 0 ? &nodes_[static_cast<size_t>(n.a)] : nullptr;
    Node* pb = n.b >= 0 ? &nodes_[static_cast<size_t>(n.b)] : nullptr;
    const bool ga = pa && pa->needs_grad;
    const bool gb = pb && pb->needs_grad;

    switch (n.op) {
      case Op::add:
      case Op::sub:
      case Op::mul: {
        const Broadcast k = broadcast_kind(pa->value, pb->value);
        for (int r = 0; r < g.rows; ++r) {
          for (int c = 0; c < g.cols; ++c) {
            const T gv = g(r, c);
            if (n.op == Op::mul) {
              if (ga) pa->grad(r, c) += gv * at_broadcast(pb->value, k, r, c);
              if (gb) at_broadcast(pb->grad, k, r, c) += gv * pa->value(r, c);
            } else {
              if (ga) pa->grad(r, c) += gv;
              if (gb) at_broadcast(pb->grad, k, r, c) += n.op == Op::add ? gv : -gv;
            }
          }
        }
        break;
      }
      case Op::matmul:
        if (ga) view(pa->grad).noalias() += view(g) * view(pb->value).transpose();
        if (gb) view(pb->grad).noalias() += view(pa->value).transpose() * view(g);
        break;
      case Op::sigmoid:
        for (size_t i = 0; i < g.size(); ++i) {
          const T y = n.value.data[i];
          pa->grad.data[i] += g.data[i] * y * (T(1) - y);
        }
        break;
      case Op::tanh:
        for (size_t i = 0; i < g.size(); ++i) {
          const T y = n.value.data[i];
          pa->grad.data[i] += g.data[i] * (T(1) - y * y);
        }
        break;
      case Op::softmax:
        for (int r = 0; r < g.rows; ++r) {
          auto y = n.value.row_span(r);
          auto gr = g.row_span(r);
          T dot = 0;
          for (int c = 0; c < g.cols; ++c) dot += gr[c] * y[c];
          auto out = pa->grad.row_span(r);
          for (int c = 0; c < g.cols; ++c) out[c] += y[c] * (gr[c] - dot);
        }
        break;
      case Op::log:
        for (size_t i = 0; i < g.size(); ++i) {
          const T x = pa->value.data[i];
          if (x >= static_cast<T>(kLogFloor)) pa->grad.data[i] += g.data[i] / x;
        }
        break;
      case Op::sum:
        for (auto& x : pa->grad.data) x += g.data[0];
        break;
      case Op::sum_rows:
        for (int r = 0; r < pa->grad.rows; ++r)
          for (auto& x : pa->grad.row_span(r)) x += g.data[static_cast<size_t>(r)];
        break;
      case Op::mean: {
        const T gv = g.data[0] / static_cast<T>(pa->value.size());
        for (auto& x : pa->grad.data) x += gv;
        break;
      }
      case Op::mse: {
        const T coef = T(2) * g.data[0] / static_cast<T>(pa->value.size());
        for (size_t i = 0; i < pa->value.size(); ++i) {
          const T d = coef * (pa->value.data[i] - pb->value.data[i]);
          if (ga) pa->grad.data[i] += d;
          if (gb) pb->grad.data[i] -= d;
        }
        break;
      }
      case Op::gather_rows:
        for (size_t r = 0; r < n.index.size(); ++r) {
          auto src = g.row_span(static_cast<int>(r));
          auto dst = pa->grad.row_span(n.index[r]);
          for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
        }
        break;
      case Op::gather_cols:
        for (int r = 0; r < g.rows; ++r)
          for (size_t c = 0; c < n.index.size(); ++c) pa->grad(r, n.index[c]) += g(r, static_cast<int>(c));
        break;
      case Op::concat_cols:
        for (int r = 0; r < g.rows; ++r) {
          auto gr = g.row_span(r);
          if (ga)
            for (int c = 0; c < pa->value.cols; ++c) pa->grad(r, c) += gr[c];
          if (gb)
            for (int c = 0; c < pb->value.cols; ++c) pb->grad(r, c) += gr[pa->value.cols + c];
        }
        break;
      case Op::scale:
        for (size_t i = 0; i < g.size(); ++i) pa->grad.data[i] += n.factor * g.data[i];
        break;
      case Op::reshape:
      case Op::straight_through:
        for (size_t i = 0; i < g.size(); ++i) pa->grad.data[i] += g.data[i];
        break;
      case Op::input:
      case Op::param:
        break;
    }
  }

  Gradients<T> out;
  for (const auto& [param, id] : params_) out.add(param, nodes_[static_cast<size_t>(id)].grad);
  return out;
}

template class Gradients<float>;
template class Gradients<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace skilltree::diffcore
