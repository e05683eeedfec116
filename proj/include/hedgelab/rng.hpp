#pragma once
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace hedgelab::rng {

// SplitMix64 (Steele/Lea/Flood 2014). Chosen over std::mt19937 because the
// stream is bit-identical on every platform and compiler, and trivially
// splittable into independent per-path streams.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on (0,1]: 53-bit resolution, never 0 so log() below is safe
  double uniform01() { return double((next() >> 11) + 1) * 0x1p-53; }

  // uniform on [lo, hi)
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (double(next() >> 11) * 0x1p-53);
  }

  // standard normal via Box-Muller; two uniforms per draw, no caching, so the
  // stream position is a pure function of how many variates were taken
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  uint64_t state_;
};

// Deterministic per-path seed: mixing (master, index) through the generator
// keeps neighbouring indices uncorrelated for any master seed, which is what
// makes parallel path simulation order-independent.
inline uint64_t path_seed(uint64_t master, uint64_t index) {
  SplitMix64 g(master ^ (index + 1) * 0x9e3779b97f4a7c15ULL);
  return g.next();
}

// Fisher-Yates with the raw 64-bit stream. Modulo bias is < 2^-40 for any
// realistic dataset size, and unlike std::shuffle the permutation does not
// depend on the standard library implementation.
template <typename T>
void shuffle(std::span<T> v, SplitMix64& g) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = size_t(g.next() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace hedgelab::rng
