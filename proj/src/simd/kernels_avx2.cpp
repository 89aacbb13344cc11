// Compiled with -mavx2 only; never called unless the CPU reports AVX2.
#include <immintrin.h>

#include <array>
#include <limits>

#include "gsw/simd/kernels.hpp"

namespace gsw::simd {
namespace {

void power_cost_row_avx2(std::span<const double> x, std::span<const double> ys, std::size_t d,
                         double p, std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t j = 0;
  if (d == 1) {
    const __m256d xv = _mm256_set1_pd(x[0]);
    for (; j + 4 <= n; j += 4) {
      const __m256d diff = _mm256_sub_pd(xv, _mm256_loadu_pd(ys.data() + j));
      _mm256_storeu_pd(out.data() + j, _mm256_mul_pd(diff, diff));
    }
  } else {
    for (; j + 4 <= n; j += 4) {
      const double* y = ys.data() + j * d;
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t k = 0; k < d; ++k) {
        const __m256d yv = _mm256_set_pd(y[3 * d + k], y[2 * d + k], y[d + k], y[k]);
        const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(x[k]), yv);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
      }
      _mm256_storeu_pd(out.data() + j, acc);
    }
  }
  // Tail rows: squared distance in scalar with the same summation order.
  for (std::size_t t = j; t < n; ++t) {
    const double* y = ys.data() + t * d;
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = x[k] - y[k];
      sq += diff * diff;
    }
    out[t] = sq;
  }
  if (p == 2.0) return;
  if (p == 1.0) {
    for (j = 0; j + 4 <= n; j += 4)
      _mm256_storeu_pd(out.data() + j, _mm256_sqrt_pd(_mm256_loadu_pd(out.data() + j)));
    for (; j < n; ++j) out[j] = power_from_sq(out[j], p);
    return;
  }
  for (j = 0; j < n; ++j) out[j] = power_from_sq(out[j], p);
}

ArgMin min_minus_avx2(std::span<const double> cost, std::span<const double> f) {
  const std::size_t n = cost.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  __m256d best = _mm256_set1_pd(inf);
  __m256d best_idx = _mm256_setzero_pd();
  __m256d idx = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256d four = _mm256_set1_pd(4.0);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d v = _mm256_sub_pd(_mm256_loadu_pd(cost.data() + j), _mm256_loadu_pd(f.data() + j));
    const __m256d lt = _mm256_cmp_pd(v, best, _CMP_LT_OQ);
    best = _mm256_blendv_pd(best, v, lt);
    best_idx = _mm256_blendv_pd(best_idx, idx, lt);
    idx = _mm256_add_pd(idx, four);
  }
  alignas(32) std::array<double, 4> vals;
  alignas(32) std::array<double, 4> ids;
  _mm256_store_pd(vals.data(), best);
  _mm256_store_pd(ids.data(), best_idx);
  ArgMin result{inf, 0};
  for (int lane = 0; lane < 4; ++lane) {
    const auto id = static_cast<std::size_t>(ids[lane]);
    if (vals[lane] < result.value || (vals[lane] == result.value && id < result.index))
      result = {vals[lane], id};
  }
  for (; j < n; ++j) {
    const double v = cost[j] - f[j];
    if (v < result.value) result = {v, j};
  }
  return result;
}

}  // namespace

const Kernels& avx2_kernels_impl() {
  static const Kernels k{"avx2", &power_cost_row_avx2, &min_minus_avx2};
  return k;
}

}  // namespace gsw::simd
