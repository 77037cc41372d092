#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace sparfima {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// A RandomStream is addressed by (seed, stream). The seed becomes the
// 64-bit Philox key; the 128-bit counter is split into a 64-bit block index
// (low words) and the 64-bit stream id (high words). Streams with different
// ids therefore never share a counter value, which is what Monte Carlo
// replications rely on for independence.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

// SplitMix64 finalizer, used to derive stream ids from structured labels.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts) noexcept;

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() noexcept;
  // Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  Philox4x32::Key key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_index_ = 0;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace sparfima
