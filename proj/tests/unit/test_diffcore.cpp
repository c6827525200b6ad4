#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "skilltree/diffcore/grad_check.hpp"
#include "skilltree/diffcore/graph.hpp"
#include "skilltree/diffcore/mlp.hpp"
#include "skilltree/diffcore/optimizer.hpp"
#include "skilltree/sdt/soft_tree.hpp"

using namespace skilltree;
using namespace skilltree::diffcore;

namespace {

using OpBuilder = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

struct Shape {
  int rows;
  int cols;
};

/// Relative FD error of sum(op(inputs) * R) for random inputs and a random weighting R.
double op_error(std::uint64_t seed, const std::vector<Shape>& shapes, const OpBuilder& op, float bound = 1.0f) {
  Rng rng(seed);
  std::vector<Param> params;
  params.reserve(shapes.size());
  for (const Shape& s : shapes) params.push_back(Param{"x", fixtures::random_tensor(s.rows, s.cols, bound, rng)});
  std::vector<Param*> ptrs;
  for (auto& p : params) ptrs.push_back(&p);
  auto build = [&](Graph<double>& g) {
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(g.param(p));
    const Var out = op(g, vars);
    const auto& v = g.value(out);
    return g.sum(g.mul(out, g.input(fixtures::random_matrix<double>(v.rows, v.cols, 1.0, seed + 1000))));
  };
  return grad_check_params(ptrs, build);
}

void check_op_over_seeds(const char* name, const std::vector<Shape>& shapes, const OpBuilder& op,
                         float bound = 1.0f) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double err = op_error(seed, shapes, op, bound);
    INFO(name << " seed " << seed);
    CHECK(err < 1e-3);
  }
}

}  // namespace

TEST_SUITE("diffcore") {

TEST_CASE("square has derivative 2x") {
  Param x{"x", Tensor(1, 1, 3.0f)};
  Graph<double> g;
  const Var v = g.param(x);
  const auto grads = g.backward(g.sum(g.mul(v, v)));
  CHECK(grads.of(x).data[0] == doctest::Approx(6.0));
}

TEST_CASE("sigmoid at zero") {
  Param x{"x", Tensor(1, 1, 0.0f)};
  Graph<double> g;
  const Var s = g.sigmoid(g.param(x));
  CHECK(g.scalar(s) == doctest::Approx(0.5));
  CHECK(g.backward(s).of(x).data[0] == doctest::Approx(0.25));
}

TEST_CASE("three-layer network matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Mlp net("net", 5, {8, 8}, 3, rng);
    const Matrix<double> x = fixtures::random_matrix<double>(4, 5, 1.0, seed + 7);
    const Matrix<double> w = fixtures::random_matrix<double>(4, 3, 1.0, seed + 9);
    auto build = [&](Graph<double>& g) { return g.sum(g.mul(net.forward(g, g.input(x)), g.input(w))); };
    const auto ptrs = net.param_ptrs();
    CHECK(grad_check_params(ptrs, build) < 1e-3);
  }
}

TEST_CASE("every differentiable op matches finite differences on ten seeds") {
  using V = const std::vector<Var>&;
  check_op_over_seeds("add", {{3, 4}, {3, 4}}, [](Graph<double>& g, V v) { return g.add(v[0], v[1]); });
  check_op_over_seeds("add row", {{3, 4}, {1, 4}}, [](Graph<double>& g, V v) { return g.add(v[0], v[1]); });
  check_op_over_seeds("add col", {{3, 4}, {3, 1}}, [](Graph<double>& g, V v) { return g.add(v[0], v[1]); });
  check_op_over_seeds("add scalar", {{3, 4}, {1, 1}}, [](Graph<double>& g, V v) { return g.add(v[0], v[1]); });
  check_op_over_seeds("sub", {{3, 4}, {1, 4}}, [](Graph<double>& g, V v) { return g.sub(v[0], v[1]); });
  check_op_over_seeds("mul", {{3, 4}, {3, 4}}, [](Graph<double>& g, V v) { return g.mul(v[0], v[1]); });
  check_op_over_seeds("mul col", {{3, 4}, {3, 1}}, [](Graph<double>& g, V v) { return g.mul(v[0], v[1]); });
  check_op_over_seeds("matmul", {{3, 4}, {4, 2}}, [](Graph<double>& g, V v) { return g.matmul(v[0], v[1]); });
  check_op_over_seeds("sigmoid", {{3, 4}}, [](Graph<double>& g, V v) { return g.sigmoid(v[0]); });
  check_op_over_seeds("tanh", {{3, 4}}, [](Graph<double>& g, V v) { return g.tanh(v[0]); });
  check_op_over_seeds("softmax", {{3, 5}}, [](Graph<double>& g, V v) { return g.softmax(v[0]); });
  check_op_over_seeds("log", {{3, 4}}, [](Graph<double>& g, V v) { return g.log(g.scale(v[0], 1.0, 1.0)); }, 0.5f);
  check_op_over_seeds("sum", {{3, 4}}, [](Graph<double>& g, V v) { return g.sum(g.tanh(v[0])); });
  check_op_over_seeds("sum_rows", {{3, 4}}, [](Graph<double>& g, V v) { return g.sum_rows(v[0]); });
  check_op_over_seeds("mean", {{3, 4}}, [](Graph<double>& g, V v) { return g.mean(g.tanh(v[0])); });
  check_op_over_seeds("mse", {{3, 4}, {3, 4}}, [](Graph<double>& g, V v) { return g.mse(v[0], v[1]); });
  check_op_over_seeds("gather_rows", {{3, 4}}, [](Graph<double>& g, V v) { return g.gather_rows(v[0], {2, 0, 2, 1}); });
  check_op_over_seeds("gather_cols", {{3, 4}}, [](Graph<double>& g, V v) { return g.gather_cols(v[0], {3, 3, 0}); });
  check_op_over_seeds("concat_cols", {{3, 4}, {3, 2}}, [](Graph<double>& g, V v) { return g.concat_cols(v[0], v[1]); });
  check_op_over_seeds("scale", {{3, 4}}, [](Graph<double>& g, V v) { return g.scale(v[0], -2.5, 0.5); });
  check_op_over_seeds("reshape", {{3, 4}}, [](Graph<double>& g, V v) { return g.tanh(g.reshape(v[0], 2, 6)); });
}

TEST_CASE("straight-through passes the downstream gradient unchanged") {
  Param src{"z", Tensor(2, 3, std::vector<float>{0.1f, -0.2f, 0.3f, 0.4f, 0.5f, -0.6f})};
  Graph<float> g;
  const Var z = g.param(src);
  const Var q = g.straight_through(z, Matrix<float>(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6}));
  CHECK(g.value(q).data == std::vector<float>{1, 2, 3, 4, 5, 6});
  const Var w = g.input(Matrix<float>(2, 3, std::vector<float>{0.7f, -1.1f, 2.0f, 0.3f, -0.9f, 1.3f}));
  const auto grads = g.backward(g.sum(g.mul(q, w)));
  CHECK(grads.of(src).data == g.value(w).data);
}

TEST_CASE("backward is linear") {
  Rng rng(5);
  Param w{"w", fixtures::random_tensor(4, 3, 1.0f, rng)};
  const Matrix<double> x = fixtures::random_matrix<double>(5, 4, 1.0, 11);
  const Matrix<double> r1 = fixtures::random_matrix<double>(5, 3, 1.0, 12);
  const Matrix<double> r2 = fixtures::random_matrix<double>(5, 3, 1.0, 13);
  auto f = [&](Graph<double>& g) { return g.sum(g.mul(g.tanh(g.matmul(g.input(x), g.param(w))), g.input(r1))); };
  auto h = [&](Graph<double>& g) { return g.sum(g.mul(g.sigmoid(g.matmul(g.input(x), g.param(w))), g.input(r2))); };
  const double a = 1.7;
  const double b = -0.4;

  Graph<double> gf;
  const auto df = gf.backward(f(gf)).of(w);
  Graph<double> gh;
  const auto dh = gh.backward(h(gh)).of(w);
  Graph<double> gc;
  const Var combo = gc.add(gc.scale(f(gc), a), gc.scale(h(gc), b));
  const auto dc = gc.backward(combo).of(w);
  for (size_t i = 0; i < dc.size(); ++i) CHECK(std::abs(dc.data[i] - (a * df.data[i] + b * dh.data[i])) < 1e-6);
}

TEST_CASE("same seed gives bit-identical values and gradients") {
  auto run = [] {
    Rng rng(42);
    Mlp net("net", 6, {16, 16}, 2, rng);
    Rng data_rng(43);
    const Tensor x = fixtures::random_tensor(8, 6, 1.0f, data_rng);
    Graph<float> g;
    const Var loss = g.mean(g.tanh(net.forward(g, g.constant(x))));
    const auto grads = g.backward(loss);
    std::vector<float> flat{g.scalar(loss)};
    for (const auto& p : net.params()) {
      const auto d = grads.of(p);
      flat.insert(flat.end(), d.data.begin(), d.data.end());
    }
    return flat;
  };
  CHECK(run() == run());
}

TEST_CASE("backward rejects non-scalar losses and non-finite values") {
  Param x{"x", Tensor(2, 2, 1.0f)};
  {
    Graph<float> g;
    const Var v = g.tanh(g.param(x));
    CHECK_THROWS_AS(g.backward(v), ContractViolation);
  }
  {
    Graph<float> g;
    const Var v = g.mul(g.param(x), g.input(Matrix<float>(2, 2, std::numeric_limits<float>::quiet_NaN())));
    CHECK_THROWS_AS(g.backward(g.sum(v)), NumericFault);
  }
}

TEST_CASE("parameters not reached by the loss get zero gradient") {
  Param used{"used", Tensor(1, 3, 2.0f)};
  Param unused{"unused", Tensor(2, 2, 5.0f)};
  Graph<float> g;
  g.param(unused);
  const auto grads = g.backward(g.sum(g.param(used)));
  const auto d = grads.of(unused);
  CHECK(d.rows == 2);
  CHECK(d.cols == 2);
  for (float v : d.data) CHECK(v == 0.0f);
}

TEST_CASE("sgd and adam steps") {
  auto one_step = [](OptimizerKind kind, float value, float grad, float lr) {
    Param p{"p", Tensor(1, 1, value)};
    Optimizer opt({&p}, {kind, lr});
    Gradients<float> g;
    g.add(&p, Tensor(1, 1, grad));
    opt.step(g);
    return p.value.data[0];
  };
  CHECK(one_step(OptimizerKind::sgd, 1.0f, 0.5f, 0.1f) == doctest::Approx(0.95f));
  CHECK(one_step(OptimizerKind::sgd, 1.0f, 0.0f, 0.1f) == 1.0f);
  CHECK(one_step(OptimizerKind::adam, 1.0f, 0.0f, 1e-3f) == 1.0f);
  const float after = one_step(OptimizerKind::adam, 1.0f, 1.0f, 1e-3f);
  CHECK(1.0f - after == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("a non-finite gradient leaves every parameter untouched") {
  Param a{"a", Tensor(1, 2, 1.0f)};
  Param b{"b", Tensor(1, 1, 2.0f)};
  Optimizer opt({&a, &b}, {OptimizerKind::adam, 0.1f});
  Gradients<float> g;
  g.add(&a, Tensor(1, 2, 1.0f));
  g.add(&b, Tensor(1, 1, std::numeric_limits<float>::infinity()));
  CHECK_THROWS_AS(opt.step(g), NumericFault);
  CHECK(a.value.data == std::vector<float>{1.0f, 1.0f});
  CHECK(b.value.data[0] == 2.0f);
  CHECK(opt.steps_taken() == 0);
}

TEST_CASE("optimizer rejects a non-positive learning rate") {
  Param p{"p", Tensor(1, 1)};
  CHECK_THROWS_AS(Optimizer({&p}, {OptimizerKind::sgd, 0.0f}), ContractViolation);
}

TEST_CASE("grad_check on closed-form functions") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(8);
  for (auto& v : x) v = u(rng);
  auto squares = [](std::span<const double> p) {
    ValueAndGradient r;
    for (double v : p) {
      r.value += v * v;
      r.gradient.push_back(2.0 * v);
    }
    return r;
  };
  CHECK(grad_check(squares, x, 1e-3) < 1e-4);

  auto constant = [](std::span<const double> p) { return ValueAndGradient{4.0, std::vector<double>(p.size(), 0.0)}; };
  CHECK(grad_check(constant, x, 1e-3) == 0.0);

  auto broken = [](std::span<const double> p) {
    return ValueAndGradient{std::numeric_limits<double>::infinity(), std::vector<double>(p.size(), 0.0)};
  };
  CHECK_THROWS_AS(grad_check(broken, x, 1e-3), NumericFault);
  CHECK_THROWS_AS(grad_check(squares, x, 0.0), ContractViolation);
}

TEST_CASE("grad_check of a depth-3 soft tree negative log-likelihood") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    sdt::SoftTree tree(3, 6, 5, seed);
    Rng rng(seed + 100);
    fill_uniform(tree.leaf_logits().value, 1.0f, rng);
    fill_uniform(tree.biases().value, 0.5f, rng);
    const Matrix<double> x = fixtures::random_matrix<double>(4, 6, 1.0, seed + 200);
    Matrix<double> onehot(4, 5);
    for (int i = 0; i < 4; ++i) onehot(i, (i * 3 + static_cast<int>(seed)) % 5) = 1.0;
    auto build = [&](Graph<double>& g) {
      const auto out = tree.forward(g, g.input(x));
      return g.scale(g.sum(g.mul(g.log(out.distribution), g.input(onehot))), -1.0);
    };
    const auto ptrs = tree.param_ptrs();
    CHECK(grad_check_params(ptrs, build) < 1e-3);
  }
}

}  // TEST_SUITE
