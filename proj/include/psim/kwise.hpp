#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "psim/bits.hpp"
#include "psim/gf2m.hpp"
#include "psim/rng.hpp"

namespace psim {

// k_ind-wise independent hash family {0,1}^a -> {0,1}^b: a random
// polynomial of degree k_ind-1 over GF(2^m), m = max(a,b), evaluated at
// the input and truncated to b bits. The seed is the coefficient vector,
// gamma = k_ind * m bits.
struct HashFamily {
  int a, b, k_ind;
  int m;
  int gamma;
  GF2m field;

  HashFamily(int a_, int b_, int k_)
      : a(a_), b(b_), k_ind(k_), m(std::max(a_, b_)), gamma(k_ * m), field(m) {
    if (a < 1 || b < 1 || k_ind < 1)
      throw std::invalid_argument("HashFamily: bad parameters");
  }

  uint64_t out_mask() const { return b == 64 ? ~0ull : (1ull << b) - 1; }

  uint64_t eval(const Bits& seed, uint64_t x) const {
    if (seed.size() != gamma)
      throw std::invalid_argument("HashFamily: seed length != gamma");
    uint64_t acc = 0, xp = 1;
    for (int t = 0; t < k_ind; ++t) {
      uint64_t coeff = seed.read_uint(t * m, m);
      acc ^= field.mul(coeff, xp);
      xp = field.mul(xp, x);
    }
    return acc & out_mask();
  }

  Bits random_seed(CounterRng& rng) const {
    Bits s;
    for (int i = 0; i < gamma; ++i) s.append_bit(rng.next_bits(1));
    return s;
  }
};

struct SeedPrefix {
  Bits bits;  // first j fixed bits of the seed
  int gamma;  // total seed length

  int fixed() const { return bits.size(); }
  int free() const { return gamma - bits.size(); }
};

// Bad events over sampling indicators X_id = [eval(seed, id) < threshold].
struct EventSpec {
  enum class Type {
    none_sampled,  // occurs iff no id in vbl is sampled
    count_above,   // occurs iff #sampled in vbl > cap
    custom,        // occurs iff custom(X restricted to vbl)
  };
  int owner = -1;
  std::vector<uint64_t> vbl;
  Type type = Type::custom;
  int cap = 0;
  std::function<bool(std::span<const uint8_t>)> custom;
  bool is_phi = false;  // tag only; Phi = undominated, Psi = overflow
};

struct CondExp {
  uint64_t num = 0;
  int denom_log2 = 0;
  bool exact = true;

  double value() const { return (double)num / std::pow(2.0, denom_log2); }
};

struct CondOptions {
  int exact_threshold = 20;
  int sample_count = 4096;  // power of two
  uint64_t salt = 0x5eedc0de;
};

namespace kwise_detail {

// Preprocessed evaluation context shared by cond_expectation and fix_seed.
struct EventSystem {
  const HashFamily* fam;
  uint64_t threshold;
  std::vector<uint64_t> univ;              // distinct ids, sorted
  std::vector<std::vector<int>> vbl_idx;   // per event, indices into univ
  std::span<const EventSpec> events;
  std::vector<uint64_t> h;                 // scratch: current hash per id
  std::vector<std::vector<uint64_t>> delta;  // [gamma][univ] per-bit XOR
  std::vector<uint8_t> x;                  // scratch: sampled flags

  int words = 0;
  std::vector<uint64_t> xw;                  // packed sampled flags
  std::vector<std::vector<uint64_t>> mask;   // per event, when maskable

  EventSystem(const HashFamily& f, uint64_t thr,
              std::span<const EventSpec> evs)
      : fam(&f), threshold(thr), events(evs) {
    for (const auto& e : evs)
      for (uint64_t id : e.vbl) univ.push_back(id);
    std::sort(univ.begin(), univ.end());
    univ.erase(std::unique(univ.begin(), univ.end()), univ.end());
    for (uint64_t id : univ)
      if (id >> f.a) throw std::invalid_argument("event id does not fit a bits");
    std::unordered_map<uint64_t, int> pos;
    for (int i = 0; i < (int)univ.size(); ++i) pos[univ[i]] = i;
    vbl_idx.reserve(evs.size());
    for (const auto& e : evs) {
      std::vector<int> ix;
      ix.reserve(e.vbl.size());
      for (uint64_t id : e.vbl) ix.push_back(pos[id]);
      vbl_idx.push_back(std::move(ix));
    }
    words = (int)(univ.size() + 63) / 64;
    xw.assign(words, 0);
    mask.resize(evs.size());
    for (size_t e = 0; e < evs.size(); ++e) {
      if (evs[e].type == EventSpec::Type::custom) continue;
      mask[e].assign(words, 0);
      for (int i : vbl_idx[e]) mask[e][i >> 6] |= 1ull << (i & 63);
    }
    // delta[g][u]: change of h(u) when seed bit g flips.
    std::vector<std::vector<uint64_t>> powers(univ.size());
    for (size_t u = 0; u < univ.size(); ++u) {
      powers[u].resize(f.k_ind);
      uint64_t xp = 1;
      for (int t = 0; t < f.k_ind; ++t) {
        powers[u][t] = xp;
        xp = f.field.mul(xp, univ[u]);
      }
    }
    delta.assign(f.gamma, std::vector<uint64_t>(univ.size()));
    for (int g = 0; g < f.gamma; ++g) {
      int t = g / f.m, r = g % f.m;
      for (size_t u = 0; u < univ.size(); ++u)
        delta[g][u] = f.field.mul(1ull << r, powers[u][t]);
    }
    h.assign(univ.size(), 0);
    x.assign(univ.size(), 0);
  }

  void load_seed_bits(const Bits& bits) {
    std::fill(h.begin(), h.end(), 0);
    for (int g = 0; g < bits.size(); ++g)
      if (bits.bit(g)) flip_bit(g);
  }

  void flip_bit(int g) {
    const auto& d = delta[g];
    for (size_t u = 0; u < h.size(); ++u) h[u] ^= d[u];
  }

  void refresh_x() {
    uint64_t omask = fam->out_mask();
    std::fill(xw.begin(), xw.end(), 0);
    for (size_t u = 0; u < h.size(); ++u) {
      bool s = (h[u] & omask) < threshold;
      x[u] = s;
      if (s) xw[u >> 6] |= 1ull << (u & 63);
    }
  }

  // Number of occurring events under the current x.
  uint64_t bad_count() const {
    uint64_t bad = 0;
    for (size_t e = 0; e < vbl_idx.size(); ++e) bad += event_bad(e);
    return bad;
  }

  bool event_bad(size_t e) const {
    const auto& ix = vbl_idx[e];
    const EventSpec& spec = events[e];
    switch (spec.type) {
      case EventSpec::Type::none_sampled: {
        const auto& mk = mask[e];
        for (int w = 0; w < words; ++w)
          if (xw[w] & mk[w]) return false;
        return true;
      }
      case EventSpec::Type::count_above: {
        const auto& mk = mask[e];
        int c = 0;
        for (int w = 0; w < words; ++w) {
          c += __builtin_popcountll(xw[w] & mk[w]);
          if (c > spec.cap) return true;
        }
        return false;
      }
      case EventSpec::Type::custom: {
        std::vector<uint8_t> vals;
        vals.reserve(ix.size());
        for (int i : ix) vals.push_back(x[i]);
        return spec.custom(vals);
      }
    }
    return false;
  }

  // Accumulates per-event occurrence counts into alpha, over either all
  // completions of `prefix` (exact) or `samples` sampled completions.
  // Bits beyond the prefix and before `gamma` are free. When split_bit is
  // >= 0, counts go to alpha0/alpha1 according to that seed bit's value.
  void exact_scan(const Bits& prefix, int split_bit, std::vector<uint64_t>& a0,
                  std::vector<uint64_t>& a1) {
    int j = prefix.size();
    int L = fam->gamma - j;
    load_seed_bits(prefix);
    uint64_t cur_split = 0;
    refresh_x();
    for (size_t e = 0; e < vbl_idx.size(); ++e)
      if (event_bad(e)) (cur_split ? a1 : a0)[e]++;
    for (uint64_t t = 1; t < (1ull << L); ++t) {
      int local = __builtin_ctzll(t);
      int g = j + local;
      flip_bit(g);
      if (g == split_bit) cur_split ^= 1;
      refresh_x();
      for (size_t e = 0; e < vbl_idx.size(); ++e)
        if (event_bad(e)) (cur_split ? a1 : a0)[e]++;
    }
  }

  void sampled_scan(const Bits& prefix, int samples, uint64_t salt,
                    std::vector<uint64_t>& a0, std::vector<uint64_t>& a1) {
    int j = prefix.size();
    for (int s = 0; s < samples; ++s) {
      CounterRng rng(salt, j, s);
      Bits full = prefix;
      full.append_bit(0);
      for (int g = j + 1; g < fam->gamma; ++g)
        full.append_bit(rng.next_bits(1));
      load_seed_bits(full);
      refresh_x();
      for (size_t e = 0; e < vbl_idx.size(); ++e)
        if (event_bad(e)) a0[e]++;
      flip_bit(j);
      refresh_x();
      for (size_t e = 0; e < vbl_idx.size(); ++e)
        if (event_bad(e)) a1[e]++;
    }
  }
};

}  // namespace kwise_detail

// E[sum of event indicators | seed prefix]: exact average over all
// completions when few enough bits remain, otherwise a deterministic
// counter-derived sample estimate (flagged).
inline CondExp cond_expectation(const HashFamily& fam, uint64_t threshold,
                                const SeedPrefix& prefix,
                                std::span<const EventSpec> events,
                                const CondOptions& opts = {}) {
  if (prefix.gamma != fam.gamma)
    throw std::invalid_argument("prefix gamma mismatch");
  kwise_detail::EventSystem sys(fam, threshold, events);
  CondExp out;
  int L = prefix.free();
  std::vector<uint64_t> a0(events.size(), 0), a1(events.size(), 0);
  if (L <= opts.exact_threshold) {
    sys.exact_scan(prefix.bits, /*split_bit=*/-1, a0, a1);
    out.exact = true;
    out.denom_log2 = L;
  } else {
    // Sampled completions; reuse the split machinery on the next free bit
    // and fold both halves together.
    sys.sampled_scan(prefix.bits, opts.sample_count / 2, opts.salt, a0, a1);
    out.exact = false;
    out.denom_log2 = ceil_log2(opts.sample_count);
  }
  for (size_t e = 0; e < events.size(); ++e) out.num += a0[e] + a1[e];
  return out;
}

struct FixSeedOptions {
  int exact_threshold = 20;
  uint64_t exact_work_budget = 1ull << 26;
  int sample_count = 4096;  // power of two
  int max_retries = 5;
  uint64_t salt = 0x5eedc0de;
  enum class Mode { automatic, exact, estimated } mode = Mode::automatic;
};

struct FixSeedResult {
  Bits seed;
  bool exact = false;
  bool exact_guaranteed = false;  // initial expectation < 1 in exact mode
  int retries = 0;
  int samples_used = 0;
  uint64_t final_bad = 0;
};

// Chooses the value of bit j given per-event conditional-expectation
// numerators for both choices (common denominator). Returns 0 or 1.
// The default decider sums and takes the argmin, ties toward 0; the
// sparsifier substitutes a decider that aggregates by convergecast.
using BitDecider =
    std::function<int(int bit_index, std::span<const uint64_t> alpha0,
                      std::span<const uint64_t> alpha1)>;

inline int default_bit_decider(int, std::span<const uint64_t> a0,
                               std::span<const uint64_t> a1) {
  uint64_t s0 = 0, s1 = 0;
  for (uint64_t v : a0) s0 += v;
  for (uint64_t v : a1) s1 += v;
  return s1 < s0 ? 1 : 0;
}

class FixSeedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Method of conditional expectations: fixes the seed bit by bit so the
// expected number of occurring events never increases. In exact mode the
// returned seed provably makes every event vanish provided the initial
// expectation is below 1; in estimated mode the result is verified and
// retried with a larger sample on failure.
inline FixSeedResult fix_seed(const HashFamily& fam, uint64_t threshold,
                              std::span<const EventSpec> events,
                              const FixSeedOptions& opts = {},
                              BitDecider decider = nullptr) {
  if (!decider) decider = default_bit_decider;
  kwise_detail::EventSystem sys(fam, threshold, events);
  FixSeedResult res;

  uint64_t exact_work =
      fam.gamma <= 62 ? (1ull << fam.gamma) *
                            std::max<uint64_t>(1, sys.univ.size() + events.size())
                      : ~0ull;
  bool try_exact = opts.mode != FixSeedOptions::Mode::estimated &&
                   fam.gamma <= opts.exact_threshold &&
                   exact_work <= opts.exact_work_budget;

  if (try_exact) {
    Bits prefix;
    bool guaranteed = false;
    for (int j = 0; j < fam.gamma; ++j) {
      std::vector<uint64_t> a0(events.size(), 0), a1(events.size(), 0);
      sys.exact_scan(prefix, /*split_bit=*/j, a0, a1);
      if (j == 0) {
        uint64_t total = 0;
        for (size_t e = 0; e < events.size(); ++e) total += a0[e] + a1[e];
        guaranteed = total < (1ull << fam.gamma);
        if (!guaranteed && opts.mode == FixSeedOptions::Mode::exact)
          throw FixSeedError(
              "fix_seed: initial expected event count >= 1 (caller "
              "precondition breach)");
      }
      int b = decider(j, a0, a1);
      prefix.append_bit(b != 0);
    }
    sys.load_seed_bits(prefix);
    sys.refresh_x();
    res.final_bad = sys.bad_count();
    res.seed = prefix;
    res.exact = true;
    res.exact_guaranteed = guaranteed;
    if (guaranteed && res.final_bad > 0)
      throw FixSeedError("fix_seed: descent invariant broken");
    if (res.final_bad == 0 || opts.mode == FixSeedOptions::Mode::exact)
      return res;
  }

  // Estimated mode with verification and geometric sample growth.
  int samples = opts.sample_count;
  for (int retry = 0; retry <= opts.max_retries; ++retry) {
    Bits prefix;
    uint64_t salt = counter_hash(opts.salt, retry + 1);
    for (int j = 0; j < fam.gamma; ++j) {
      std::vector<uint64_t> a0(events.size(), 0), a1(events.size(), 0);
      sys.sampled_scan(prefix, samples, salt, a0, a1);
      int b = decider(j, a0, a1);
      prefix.append_bit(b != 0);
    }
    sys.load_seed_bits(prefix);
    sys.refresh_x();
    uint64_t bad = sys.bad_count();
    if (bad == 0) {
      res.seed = prefix;
      res.exact = false;
      res.retries = retry;
      res.samples_used = samples;
      res.final_bad = 0;
      return res;
    }
    samples = std::min(samples * 4, 1 << 22);
  }
  throw FixSeedError("fix_seed: no zero-event seed found within retry budget");
}

// Evaluates the sampling indicator for one id under a full seed.
inline bool sampled_under(const HashFamily& fam, const Bits& seed, uint64_t id,
                          uint64_t threshold) {
  return fam.eval(seed, id) < threshold;
}

}  // namespace psim
