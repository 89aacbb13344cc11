#include <limits>

#include "gsw/simd/kernels.hpp"

namespace gsw::simd {
namespace {

void power_cost_row_scalar(std::span<const double> x, std::span<const double> ys, std::size_t d,
                           double p, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double* y = ys.data() + j * d;
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = x[k] - y[k];
      sq += diff * diff;
    }
    out[j] = power_from_sq(sq, p);
  }
}

ArgMin min_minus_scalar(std::span<const double> cost, std::span<const double> f) {
  ArgMin best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t j = 0; j < cost.size(); ++j) {
    const double v = cost[j] - f[j];
    if (v < best.value) best = {v, j};
  }
  return best;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{"scalar", &power_cost_row_scalar, &min_minus_scalar};
  return k;
}

}  // namespace gsw::simd
