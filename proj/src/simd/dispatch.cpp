#include "gsw/simd/kernels.hpp"

namespace gsw::simd {

#if defined(GSW_HAVE_AVX2)
const Kernels& avx2_kernels_impl();
#endif

const Kernels* avx2_kernels() {
#if defined(GSW_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernels_impl() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active_kernels() {
  static const Kernels& chosen = avx2_kernels() ? *avx2_kernels() : scalar_kernels();
  return chosen;
}

}  // namespace gsw::simd
