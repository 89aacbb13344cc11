#pragma once

#include <array>
#include <cstdint>

namespace gsw {

/// Addresses one reproducible random stream: draws depend only on (seed, stream).
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Child stream for a named sub-task. Children of distinct tags are independent.
  [[nodiscard]] RngSpec derive(std::uint64_t tag) const noexcept;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

/// SplitMix64 finalizer; used for stream derivation only.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based generator. The key is the seed; the upper half of the
/// counter is the stream id and the lower half is the block index, so
/// every (seed, stream) pair owns a private sequence of 2^64 blocks.
class CounterRng {
 public:
  explicit CounterRng(RngSpec spec) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_pos() noexcept { return 1.0 - uniform(); }
  /// Standard normal (Box-Muller, second variate cached).
  double normal() noexcept;
  /// Standard Laplace (unit scale).
  double laplace() noexcept;
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace gsw
