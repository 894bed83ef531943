#pragma once

#include <cstdint>

namespace pushdet {

/// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the full algorithm is
/// three lines of fixed-width arithmetic, so ports can reproduce every draw.
class SplitMix64 {
 public:
  static constexpr const char* kName = "splitmix64";

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Unbiased draw from [0, bound) by rejection. bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; uses two draws per call.
  double normal() noexcept;

  /// Independent stream for (seed, stream). Stream 0 differs from SplitMix64(seed).
  static constexpr SplitMix64 stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 mixer(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return SplitMix64(mixer.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace pushdet
