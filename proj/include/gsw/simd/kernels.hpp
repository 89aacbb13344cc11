#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops of the transport code. Each kernel has a scalar
// reference and, on x86-64, an AVX2 variant that must produce bit-identical
// results (the build disables FMA contraction so both round the same way).

namespace gsw::simd {

struct ArgMin {
  double value;
  std::size_t index;
};

/// out[j] = |x - y_j|^p where y_j is row j of the row-major `ys` (dimension d).
using PowerCostRowFn = void (*)(std::span<const double> x, std::span<const double> ys,
                                std::size_t d, double p, std::span<double> out);

/// min_j (cost[j] - f[j]); ties resolve to the lowest j.
using MinMinusFn = ArgMin (*)(std::span<const double> cost, std::span<const double> f);

struct Kernels {
  const char* name;
  PowerCostRowFn power_cost_row;
  MinMinusFn min_minus;
};

/// |.|^p from a squared norm; exact for p = 1, 2 and zero at the origin.
inline double power_from_sq(double sq, double p);

const Kernels& scalar_kernels();
/// Null when AVX2 was not compiled in or the CPU lacks it.
const Kernels* avx2_kernels();
/// Best variant for the running CPU, chosen once.
const Kernels& active_kernels();

}  // namespace gsw::simd

#include <cmath>

namespace gsw::simd {

inline double power_from_sq(double sq, double p) {
  if (p == 2.0) return sq;
  if (sq == 0.0) return 0.0;
  if (p == 1.0) return std::sqrt(sq);
  return std::exp(0.5 * p * std::log(sq));
}

}  // namespace gsw::simd
