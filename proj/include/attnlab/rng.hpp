// Pinned pseudo-random generator.
//
// Everything that must reproduce bit-for-bit across runs and platforms
// (subset permutations, synthetic corpora, weight init) draws from
// splitmix64. The generator state is seed + n*gamma, i.e. output n is a
// pure integer function of (seed, n), so integer-only consumers
// (shuffles, bounded draws) are portable. Floating-point consumers
// (normal draws) are deterministic for a fixed platform/libm.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace attnlab {

// Name recorded in provenance metadata next to every stored seed.
inline constexpr std::string_view kRngName = "splitmix64/v1";

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, n) by rejection.
  uint64_t next_below(uint64_t n) {
    // threshold = 2^64 mod n; values below it would bias the modulus
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) {
        return r % n;
      }
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller, one value per call (the spare sine branch is discarded
  // so the draw count per sample is fixed).
  double next_normal(double mean, double stddev) {
    double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586 * u2);
  }

  // Fisher-Yates, high index down, using next_below. With a fixed seed
  // the resulting permutation is identical on every platform.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Stable derivation of stream seeds, e.g. (run seed, epoch) -> shuffle
// seed, so independent streams never share state.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  SplitMix64 g(base ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
  return g.next_u64();
}

}  // namespace attnlab
