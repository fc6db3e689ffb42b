#pragma once

#include <cstdint>

namespace prospect {

/// SplitMix64 pseudorandom generator (Steele/Vigna reference algorithm).
///
/// The state advances by the 64-bit golden-ratio increment and each output is
/// passed through the two-round murmur-style finalizer. The algorithm is fully
/// specified here so that reimplementations in other languages reproduce the
/// same streams bit for bit:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
///
/// Substream `i` of a seed starts from mix64(seed ^ (i + 1) * 0x9E3779B97F4A7C15),
/// which decorrelates per-run streams while remaining a pure function of
/// (seed, i).
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) built from the top 53 bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(mix64(seed ^ (index + 1) * 0x9E3779B97F4A7C15ULL));
  }

private:
  std::uint64_t state_;
};

} // namespace prospect
