#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "skilltree/diffcore/tensor.hpp"

namespace skilltree::diffcore {

enum class Op : std::uint8_t {
  input,
  param,
  add,
  sub,
  mul,
  matmul,
  sigmoid,
  tanh,
  softmax,
  log,
  sum,
  sum_rows,
  mean,
  mse,
  gather_rows,
  gather_cols,
  concat_cols,
  scale,
  reshape,
  straight_through,
};

const char* op_name(Op op);

/// Handle to a node of a Graph.
struct Var {
  int id = -1;
};

/// Result of a backward pass: one gradient per parameter registered in the graph.
template <class T>
class Gradients {
 public:
  /// Gradient for `p`, or nullptr if `p` never entered the graph.
  const Matrix<T>* find(const Param& p) const;
  /// Gradient for `p`; zeros of p's shape if `p` never entered the graph.
  Matrix<T> of(const Param& p) const;

  const std::vector<std::pair<const Param*, Matrix<T>>>& entries() const noexcept { return entries_; }
  void add(const Param* p, Matrix<T> g) { entries_.emplace_back(p, std::move(g)); }

 private:
  std::vector<std::pair<const Param*, Matrix<T>>> entries_;
};

/// Reverse-mode tape over dense 2-D arrays.
///
/// Nodes are appended in creation order, which is a topological order; backward
/// walks it in reverse, so gradient accumulation order is fixed by node id.
/// Parameters are read from float storage and computed in T, which lets the
/// same loss-building code run in double for gradient verification.
///
/// Broadcasting for add/sub/mul: the right operand may be the same shape, a
/// 1×C row, an R×1 column, or a 1×1 scalar.
template <class T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Matrix<T> value);
  /// Float tensor entered as a non-differentiable input.
  Var constant(const Tensor& value);
  /// Registers a trainable parameter. Registering the same Param twice returns the same node.
  Var param(const Param& p);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var matmul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// Row-wise softmax.
  Var softmax(Var a);
  /// Natural log with the input clamped at 1e-12.
  Var log(Var a);
  Var sum(Var a);
  /// R×C -> R×1.
  Var sum_rows(Var a);
  Var mean(Var a);
  /// Mean of squared differences over all elements.
  Var mse(Var a, Var b);
  Var gather_rows(Var a, std::vector<int> rows);
  Var gather_cols(Var a, std::vector<int> cols);
  Var concat_cols(Var a, Var b);
  /// factor * a + offset.
  Var scale(Var a, T factor, T offset = T(0));
  Var reshape(Var a, int rows, int cols);
  /// Stop-gradient: a fresh input holding a's current value.
  Var detach(Var a);
  /// Forward value is `value` (bit-for-bit); the backward pass hands the
  /// incoming gradient to `source` unchanged. Shapes must match.
  Var straight_through(Var source, Matrix<T> value);

  const Matrix<T>& value(Var v) const { return nodes_.at(static_cast<size_t>(v.id)).value; }
  T scalar(Var v) const;
  Op op(Var v) const { return nodes_.at(static_cast<size_t>(v.id)).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Accumulates d(loss)/d(node) for every node and returns parameter gradients.
  /// Throws ContractViolation for a non-scalar loss, NumericFault if any
  /// forward value is non-finite.
  Gradients<T> backward(Var loss);

 private:
  struct Node {
    Op op = Op::input;
    int a = -1;
    int b = -1;
    bool needs_grad = false;
    Matrix<T> value;
    Matrix<T> grad;
    const Param* param = nullptr;
    std::vector<int> index;
    T factor = T(1);
  };

  Var push(Node n);
  const Node& node(Var v) const;
  Var binary(Op op, Var a, Var b);

  std::vector<Node> nodes_;
  std::vector<std::pair<const Param*, int>> params_;
};

extern template class Gradients<float>;
extern template class Gradients<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace skilltree::diffcore
