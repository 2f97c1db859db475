#pragma once

#include <cstdint>

namespace eulerlab {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over <random> engines plus
// distributions because the sequence of doubles must be identical across
// platforms and languages for a fixed seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, second discarded).
  double normal();

 private:
  std::uint64_t state_;
};

}  // namespace eulerlab
