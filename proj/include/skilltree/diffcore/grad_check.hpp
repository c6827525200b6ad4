#pragma once

#include <functional>
#include <span>
#include <vector>

#include "skilltree/diffcore/graph.hpp"

namespace skilltree::diffcore {

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// max_i |analytic_i - central_i| / max(1e-8, |central_i|) where central_i is
/// the central difference (f(x+eps e_i) - f(x-eps e_i)) / 2eps.
/// Throws NumericFault if f is non-finite anywhere it is evaluated.
double grad_check(const std::function<ValueAndGradient(std::span<const double>)>& f,
                  std::span<const double> x, double eps);

struct ParamCheckOptions {
  double eps = 1e-3;
  /// Coordinates probed per parameter; <= 0 probes all of them.
  int coords_per_param = 0;
  std::uint64_t seed = 0;
};

/// Same relative-error measure for a loss built by `build` in double precision,
/// perturbing the float storage of `params` in place (restored afterwards).
/// The step actually taken is measured from the rounded float values.
double grad_check_params(std::span<Param* const> params,
                         const std::function<Var(Graph<double>&)>& build,
                         const ParamCheckOptions& options = {});

}  // namespace skilltree::diffcore
