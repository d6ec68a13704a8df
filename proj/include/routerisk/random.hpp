#pragma once

// Portable seeded random streams. The std distributions are
// implementation-defined, so uniform draws are built directly on
// mt19937_64 output to keep results identical across standard libraries.

#include <cstdint>
#include <random>

namespace routerisk {

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t substream = 0)
      : engine_(mix(seed ^ mix(substream + 0x9e3779b97f4a7c15ULL))) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace routerisk
