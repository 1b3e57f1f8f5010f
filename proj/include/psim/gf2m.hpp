#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace psim {

// Arithmetic in GF(2^m) for m <= 32, with a fixed reduction polynomial per
// m (the lexicographically smallest irreducible of each degree) so that
// hash values are reproducible across implementations.
class GF2m {
 public:
  explicit GF2m(int m) : m_(m) {
    if (m < 1 || m > 32) throw std::invalid_argument("GF2m: m out of range");
    full_poly_ = (1ull << m) | taps_table()[m];
  }

  int m() const { return m_; }

  uint64_t mul(uint64_t a, uint64_t b) const {
    uint64_t r = 0;
    while (b) {
      if (b & 1) r ^= a;
      b >>= 1;
      a <<= 1;
    }
    for (int bit = 2 * m_ - 2; bit >= m_; --bit)
      if ((r >> bit) & 1) r ^= full_poly_ << (bit - m_);
    return r;
  }

  uint64_t pow(uint64_t a, uint64_t e) const {
    uint64_t r = 1;
    while (e) {
      if (e & 1) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }

  uint64_t mask() const { return m_ == 64 ? ~0ull : (1ull << m_) - 1; }

  static const std::array<uint64_t, 33>& taps_table() {
    // taps_table()[m] holds the low terms; the polynomial is x^m + taps.
    static const std::array<uint64_t, 33> t = {
        0,    0x1,  0x3,  0x3,  0x3,  0x5,  0x3,  0x3,  0x1b, 0x3,  0x9,
        0x5,  0x9,  0x1b, 0x21, 0x3,  0x2b, 0x9,  0x9,  0x27, 0x9,  0x5,
        0x3,  0x21, 0x1b, 0x9,  0x1b, 0x27, 0x3,  0x5,  0x3,  0x9,  0x8d};
    return t;
  }

  // Rabin's test; used by the test suite to re-verify the table.
  static bool is_irreducible(int m, uint64_t taps) {
    uint64_t p = (1ull << m) | taps;
    auto deg = [](uint64_t x) {
      int d = -1;
      while (x) {
        ++d;
        x >>= 1;
      }
      return d;
    };
    auto mulmod = [&](uint64_t a, uint64_t b) {
      __uint128_t r = 0, aa = a;
      while (b) {
        if (b & 1) r ^= aa;
        aa <<= 1;
        b >>= 1;
      }
      for (int bit = 2 * m; bit >= m; --bit)
        if ((r >> bit) & 1) r ^= (__uint128_t)p << (bit - m);
      return (uint64_t)r;
    };
    auto gcd = [&](uint64_t a, uint64_t b) {
      while (b) {
        int da = deg(a), db = deg(b);
        if (da < db) {
          std::swap(a, b);
          continue;
        }
        a ^= b << (da - db);
      }
      return a;
    };
    uint64_t x = 2, t = x;
    for (int i = 0; i < m; ++i) t = mulmod(t, t);
    if (m == 1) {
      // GF(2): x == 1 mod (x+1).
      if (t != 1) return false;
    } else if (t != x) {
      return false;
    }
    for (int q = 2; q <= m; ++q) {
      if (m % q) continue;
      bool prime = true;
      for (int d = 2; d * d <= q; ++d)
        if (q % d == 0) prime = false;
      if (!prime) continue;
      uint64_t s = x;
      for (int i = 0; i < m / q; ++i) s = mulmod(s, s);
      if (gcd(s ^ x, p) != 1) return false;
    }
    return true;
  }

 private:
  int m_;
  uint64_t full_poly_;
};

}  // namespace psim
