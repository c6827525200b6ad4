#include "skilltree/diffcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace skilltree::diffcore {

namespace {

double relative_error(double analytic, double central) {
  return std::abs(analytic - central) / std::max(1e-8, std::abs(central));
}

double finite_or_throw(double v) {
  if (!std::isfinite(v)) throw NumericFault("grad_check: non-finite function value");
  return v;
}

}  // namespace

double grad_check(const std::function<ValueAndGradient(std::span<const double>)>& f,
                  std::span<const double> x, double eps) {
  require(eps > 0.0, "grad_check eps must be positive");
  const ValueAndGradient base = f(x);
  finite_or_throw(base.value);
  require(base.gradient.size() == x.size(), "gradient length differs from x");

  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = finite_or_throw(f(probe).value);
    probe[i] = x[i] - eps;
    const double down = finite_or_throw(f(probe).value);
    probe[i] = x[i];
    worst = std::max(worst, relative_error(base.gradient[i], (up - down) / (2.0 * eps)));
  }
  return worst;
}

double grad_check_params(std::span<Param* const> params,
                         const std::function<Var(Graph<double>&)>& build,
                         const ParamCheckOptions& options) {
  require(options.eps > 0.0, "grad_check eps must be positive");
  auto evaluate = [&]() {
    Graph<double> g;
    const Var loss = build(g);
    return finite_or_throw(g.scalar(loss));
  };

  Gradients<double> analytic;
  {
    Graph<double> g;
    const Var loss = build(g);
    finite_or_throw(g.scalar(loss));
    analytic = g.backward(loss);
  }

  Rng rng(options.seed);
  double worst = 0.0;
  for (Param* p : params) {
    const Matrix<double> grad = analytic.of(*p);
    std::vector<size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), size_t{0});
    if (options.coords_per_param > 0 && coords.size() > static_cast<size_t>(options.coords_per_param)) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<size_t>(options.coords_per_param));
      std::sort(coords.begin(), coords.end());
    }
    for (size_t i : coords) {
      float& slot = p->value.data[i];
      const float original = slot;
      const float up_x = static_cast<float>(original + options.eps);
      const float down_x = static_cast<float>(original - options.eps);
      slot = up_x;
      const double up = evaluate();
      slot = down_x;
      const double down = evaluate();
      slot = original;
      const double central = (up - down) / (static_cast<double>(up_x) - static_cast<double>(down_x));
      worst = std::max(worst, relative_error(grad.data[i], central));
    }
  }
  return worst;
}

}  // namespace skilltree::diffcore
