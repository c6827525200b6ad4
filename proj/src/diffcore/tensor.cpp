#include "skilltree/diffcore/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace skilltree::diffcore {

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void fill_uniform(Tensor& t, float bound, Rng& rng) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (auto& x : t.data) x = dist(rng);
}

}  // namespace skilltree::diffcore
