#pragma once

#include <cstdint>
#include <random>

namespace ltcr {

// Deterministic RNG used everywhere in the project. The engine (mt19937_64)
// is fully specified by the standard and the distribution helpers below are
// hand-rolled, so a (seed, call sequence) pair produces the same stream on
// every platform and build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  int uniform_int(int n) {
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % un;
    std::uint64_t draw = next_u64();
    while (draw >= limit) draw = next_u64();
    return static_cast<int>(draw % un);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Derives an independent stream seed from (base, salt...). splitmix64 keeps
  /// nearby inputs from yielding correlated seeds.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ull * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ltcr
