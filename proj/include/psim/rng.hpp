#pragma once

#include <cstdint>

namespace psim {

// splitmix64 finalizer; the basis of all counter-derived randomness here.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t counter_hash(uint64_t a, uint64_t b = 0, uint64_t c = 0,
                             uint64_t d = 0) {
  uint64_t h = mix64(a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  h = mix64(h ^ d);
  return h;
}

// Counter-based generator: the stream is a pure function of the key, so
// replays are bit-identical regardless of call interleaving elsewhere.
class CounterRng {
 public:
  explicit CounterRng(uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0)
      : key_(counter_hash(k1, k2, k3)) {}

  uint64_t next_u64() { return counter_hash(key_, ++ctr_); }

  uint64_t next_bits(int width) {
    if (width == 0) return 0;
    return next_u64() >> (64 - width);
  }

  // Uniform in [0, n) via 128-bit multiply; deterministic, negligible bias.
  uint64_t uniform(uint64_t n) {
    return (uint64_t)(((__uint128_t)next_u64() * n) >> 64);
  }

  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  uint64_t key_;
  uint64_t ctr_ = 0;
};

}  // namespace psim
