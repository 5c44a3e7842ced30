#pragma once

#include <cstdint>

namespace layercut {

/// Counter-based generator: output i of stream s is a SplitMix64-style hash
/// of (seed, s, i). Results depend only on those three integers, so draws
/// are reproducible across platforms and independent of call scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in (0, 1].
  double uniform_open_zero() noexcept;
  /// Standard normal via Box-Muller (both halves used).
  double normal() noexcept;
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combines two stream components into one stream id.
std::uint64_t stream_id(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace layercut
