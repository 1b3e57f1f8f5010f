#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "psim/comm.hpp"
#include "psim/congest.hpp"
#include "psim/graph.hpp"
#include "psim/kwise.hpp"
#include "psim/netdecomp.hpp"
#include "psim/verify.hpp"

namespace psim {

enum class Profile { paper, desk };

// Constants of the sampling sparsifier. The `paper` profile keeps the
// analysis constants (24, 72, 2^5, 8 log n); the `desk` profile scales
// them down so that the stage machinery actually runs on graphs small
// enough to oracle-check, and keeps the derandomization seed short enough
// to enumerate or sample quickly. Oracles always check against the active
// profile's own cap.
struct SparsifyParams {
  Profile profile = Profile::desk;
  int c_samp = 3;
  int cap_c = 9;
  int slack = 4;  // power of two
  int indep = 0;  // 0 = profile default (paper: 8 log n, desk: 4)
  int sample_count = 256;
  int exact_threshold = 20;
  uint64_t exact_work_budget = 1ull << 26;
  int max_retries = 5;
  bool check_oracles = true;

  static SparsifyParams paper_profile() {
    SparsifyParams p;
    p.profile = Profile::paper;
    p.c_samp = 24;
    p.cap_c = 72;
    p.slack = 32;
    p.sample_count = 4096;
    return p;
  }
  static SparsifyParams desk_profile() { return SparsifyParams{}; }

  int resolve_indep(int log_n) const {
    if (indep > 0) return indep;
    return profile == Profile::paper ? 8 * log_n : 4;
  }
  int cap(int log_n) const { return cap_c * log_n; }
  const char* profile_name() const {
    return profile == Profile::paper ? "paper" : "desk";
  }
};

inline int graph_log_n(const Graph& g) {
  return std::max(1, ceil_log2(std::max<uint64_t>(2, g.n)));
}

// The overlay primitives require bandwidth >= the certified Q-degree
// bound (still Theta(log n): the cap is c * log n). Drivers widen their
// budget accordingly; the ops themselves keep the strict precondition.
inline SimConfig widen_for_overlay(SimConfig cfg, const Graph& g,
                                   int needed_bits) {
  cfg.bandwidth_bits = std::max(cfg.resolve_bandwidth(g), needed_bits);
  return cfg;
}

// r := floor(log2 Delta_A - log2 log n) - log2 slack, computed exactly.
inline int stage_count(long long delta_a, int log_n, int slack) {
  if (delta_a < 1) return 0;
  int k = -1;
  while ((long long)log_n << (k + 1) <= delta_a) ++k;
  return k - ceil_log2(slack);
}

inline uint64_t stage_threshold(const SparsifyParams& p, int i, int log_n) {
  return (uint64_t)p.c_samp * (1ull << i) * (uint64_t)log_n;
}

inline int stage_hash_bits(long long delta_a) {
  return std::max(1, ceil_log2((uint64_t)std::max(2ll, delta_a)));
}

struct StageStats {
  int s = 1;        // iteration (power-graph exponent)
  int i = 1;        // stage index
  int h_size = 0;
  int m_size = 0;
  int max_active_degree = 0;
  bool exact_mode = false;
  int retries = 0;
};

struct StageState {
  int i = 1;  // 1-based stage index
  std::vector<int> h;  // active vertices, sorted
  std::vector<int> m;  // selected by the most recent stage
  long long delta_a = 0;
  int r = 0;
};

// Oracle for the per-stage clauses:
//   (i)  every vertex has at most cap selected distance-s neighbors,
//   (ii) every vertex with high active degree is dominated within s hops,
//   (iii) active degrees dropped below delta_a / 2^i.
struct StageClauses {
  int cap_violations = 0;
  int domination_violations = 0;
  int shrink_violations = 0;
  bool ok() const {
    return cap_violations + domination_violations + shrink_violations == 0;
  }
};

inline StageClauses check_stage_clauses(const Graph& g, int s,
                                        const std::vector<int>& h_before,
                                        const std::vector<int>& m_selected,
                                        const std::vector<int>& h_after,
                                        long long delta_a, int i, int cap) {
  StageClauses out;
  std::vector<char> in_h(g.n, 0), in_m(g.n, 0), in_h2(g.n, 0);
  for (int v : h_before) in_h[v] = 1;
  for (int v : m_selected) in_m[v] = 1;
  for (int v : h_after) in_h2[v] = 1;
  auto m_dist = nd_detail::multi_bfs(g, m_selected, s);
  for (int v = 0; v < g.n; ++v) {
    auto dist = bfs_distances(g, v, s);
    int dm = 0, dh = 0, dh2 = 0;
    for (int w = 0; w < g.n; ++w) {
      if (w == v || dist[w] > s) continue;
      dm += in_m[w];
      dh += in_h[w];
      dh2 += in_h2[w];
    }
    if (dm > cap) ++out.cap_violations;
    bool high = (long long)dh * (1ll << i) >= delta_a;
    if (high && !(in_m[v] || m_dist[v] <= s)) ++out.domination_violations;
    if ((long long)dh2 * (1ll << i) >= delta_a) ++out.shrink_violations;
  }
  return out;
}

// One derandomized stage: conditional-expectation seed fixing followed by
// selection, two-view-hop deactivation, and the knowledge refresh
// broadcast. All three stage clauses are hard-asserted when oracles are
// enabled. Declared after det_sparsify_g.
struct StageState;
inline StageState derand_stage(const Graph& g, int s, const StageState& st,
                               const SparsifyParams& p, const SimConfig& cfg,
                               int log_n);

// One randomized sampling stage (the object of the statistical smoke
// test). Sampling decisions come from a random member of the k-wise
// family; deactivation floods 2 view-hops.
inline StageState random_stage(const Graph& g, int s, const StageState& st,
                               const SparsifyParams& p, uint64_t rng_seed,
                               int log_n, RoundReport* rep = nullptr) {
  StageState next;
  next.i = st.i + 1;
  next.delta_a = st.delta_a;
  next.r = st.r;
  if (st.h.empty()) return next;
  HashFamily fam(g.id_bits, stage_hash_bits(st.delta_a),
                 p.resolve_indep(log_n));
  CounterRng rng(0x5a3137, rng_seed, st.i);
  Bits seed = fam.random_seed(rng);
  uint64_t threshold =
      std::min<uint64_t>(stage_threshold(p, st.i, log_n), 1ull << fam.b);
  std::vector<int> m;
  for (int v : st.h)
    if (fam.eval(seed, g.ids[v]) < threshold) m.push_back(v);
  auto reached = nd_detail::multi_bfs(g, m, 2 * s);
  for (int v : st.h)
    if (reached[v] == kUnreachable) next.h.push_back(v);
  next.m = m;
  if (rep) rep->rounds_used += 2 * s;
  return next;
}

// ---------------------------------------------------------------------------
// DetSparsification on G^s, simulated on G (driver).

struct DetSparsifyOutcome {
  std::vector<int> q;
  SparseOverlay overlay_on_q;  // radius s, restricted to q
  RoundReport report;
  std::vector<StageStats> stats;
  bool fallback = false;  // r <= 0: returned the active set unchanged
  std::vector<int> last_m;  // selections of the final stage run
  std::vector<int> last_h;  // survivors after the final stage run
};

namespace sparsify_detail {

inline SparseOverlay restrict_overlay(const Graph& g, const SparseOverlay& ov,
                                      const std::vector<int>& subset) {
  SparseOverlay out;
  out.q = subset;
  std::sort(out.q.begin(), out.q.end());
  out.radius = ov.radius;
  std::vector<char> keep(g.n, 0);
  std::vector<char> keep_id(1ull << g.id_bits, 0);
  for (int v : out.q) {
    keep[v] = 1;
    keep_id[g.ids[v]] = 1;
  }
  for (size_t qi = 0; qi < ov.q.size(); ++qi)
    if (keep[ov.q[qi]]) out.trees.push_back(ov.trees[qi]);
  auto filter = [&](const std::vector<uint64_t>& ids) {
    std::vector<uint64_t> r;
    for (uint64_t id : ids)
      if (keep_id[id]) r.push_back(id);
    return r;
  };
  out.known.resize(g.n);
  for (int v = 0; v < g.n; ++v) out.known[v] = filter(ov.known[v]);
  out.nbr_layers.resize(ov.nbr_layers.size());
  for (size_t r = 0; r < ov.nbr_layers.size(); ++r) {
    out.nbr_layers[r].resize(g.n);
    for (int v = 0; v < g.n; ++v) {
      out.nbr_layers[r][v].resize(ov.nbr_layers[r][v].size());
      for (size_t j = 0; j < ov.nbr_layers[r][v].size(); ++j)
        out.nbr_layers[r][v][j] = filter(ov.nbr_layers[r][v][j]);
    }
  }
  int at = 0, below = 0;
  for (int v = 0; v < g.n; ++v) {
    auto dist = bfs_distances(g, v, out.radius);
    int da = keep[v] ? 1 : 0, db = keep[v] ? 1 : 0;
    for (int w = 0; w < g.n; ++w) {
      if (w == v || !keep[w]) continue;
      if (dist[w] <= out.radius) ++da;
      if (dist[w] <= out.radius - 1) ++db;
    }
    at = std::max(at, da);
    below = std::max(below, db);
  }
  out.maxdeg_at = at;
  out.maxdeg_below = below;
  return out;
}

}  // namespace sparsify_detail

// Runs DetSparsification with active set = overlay.q on the power graph
// G^s, with communication network G. The overlay must be at radius s over
// the active set. Bit fixing aggregates conditional expectations over a
// spanning tree; deactivation flags flood 2s hops; deactivated nodes
// broadcast their ID one power-hop so everyone maintains distance-s
// knowledge of the shrinking active set.
inline DetSparsifyOutcome det_sparsify_g(const Graph& g, int s,
                                         const SparseOverlay& ov,
                                         long long delta_a,
                                         const SparsifyParams& p,
                                         const SimConfig& cfg_in, int log_n,
                                         int first_stage = 1,
                                         int max_stages = 0) {
  if (ov.radius != s)
    throw std::invalid_argument("det_sparsify_g: overlay radius != s");
  SimConfig cfg = widen_for_overlay(cfg_in, g, 2 * ov.maxdeg_below);
  DetSparsifyOutcome out;
  const std::vector<int>& active = ov.q;

  // Precondition: delta_a covers every distance-s active degree.
  for (int v = 0; v < g.n; ++v) {
    int d = (int)ov.known[v].size();
    if (d > delta_a)
      throw std::invalid_argument("det_sparsify_g: delta_a understated");
  }

  int r = stage_count(delta_a, log_n, p.slack);
  const int cap = p.cap(log_n);
  if (r < first_stage) {
    out.q = active;
    out.overlay_on_q = ov;
    out.fallback = true;
    return out;
  }
  if (max_stages > 0) r = std::min(r, first_stage + max_stages - 1);

  auto lead = leader_spanning_tree(g, cfg);
  if (!lead.connected)
    throw std::invalid_argument("det_sparsify_g: graph must be connected");
  out.report.merge(lead.report);
  const BfsTree& tree = lead.tree;
  const int value_w = std::min(60, 26 + ceil_log2(std::max(2, g.n)));

  std::vector<char> in_h(g.n, 0);
  for (int v : active) in_h[v] = 1;
  std::vector<int> h = active;
  // act_known[v] = IDs in N^s(v, H_i); starts as the overlay knowledge.
  std::vector<std::vector<uint64_t>> act_known = ov.known;
  std::vector<int> all_selected;
  HashFamily fam(g.id_bits, stage_hash_bits(delta_a), p.resolve_indep(log_n));

  for (int i = first_stage; i <= r && !h.empty(); ++i) {
    uint64_t threshold =
        std::min<uint64_t>(stage_threshold(p, i, log_n), 1ull << fam.b);

    // Events: Phi for high-active-degree vertices, Psi where an overflow
    // is possible at all.
    std::vector<EventSpec> events;
    for (int v = 0; v < g.n; ++v) {
      long long dh = (long long)act_known[v].size();
      if (dh * (1ll << i) >= delta_a) {
        EventSpec phi;
        phi.owner = v;
        phi.vbl = act_known[v];
        if (in_h[v]) phi.vbl.push_back(g.ids[v]);
        std::sort(phi.vbl.begin(), phi.vbl.end());
        phi.type = EventSpec::Type::none_sampled;
        phi.is_phi = true;
        events.push_back(std::move(phi));
      }
      if (dh > cap) {
        EventSpec psi;
        psi.owner = v;
        psi.vbl = act_known[v];
        psi.type = EventSpec::Type::count_above;
        psi.cap = cap;
        events.push_back(std::move(psi));
      }
    }

    FixSeedOptions opts;
    opts.exact_threshold = p.exact_threshold;
    opts.exact_work_budget = p.exact_work_budget;
    opts.sample_count = p.sample_count;
    opts.max_retries = p.max_retries;
    opts.salt = counter_hash(0xde7a11, s, i);

    BitDecider decider = [&](int j, std::span<const uint64_t> a0,
                             std::span<const uint64_t> a1) {
      std::vector<uint64_t> by_v0(g.n, 0), by_v1(g.n, 0);
      for (size_t e = 0; e < events.size(); ++e) {
        by_v0[events[e].owner] += a0[e];
        by_v1[events[e].owner] += a1[e];
      }
      auto dec = aggregate_and_decide(g, tree, by_v0, by_v1, value_w, cfg);
      out.report.merge(dec.report);
      (void)j;
      return dec.bit;
    };

    auto fixed = fix_seed(fam, threshold, events, opts, decider);

    std::vector<int> m;
    for (int v : h)
      if (fam.eval(fixed.seed, g.ids[v]) < threshold) m.push_back(v);

    // Deactivate the 2-hop view neighborhood of selected nodes (2s hops
    // in G), then let every freshly deactivated node broadcast its ID one
    // power-hop so distance-s knowledge stays current.
    auto flood = flood_reach(g, m, 2 * s, cfg);
    out.report.merge(flood.report);
    std::vector<char> reached(g.n, 0);
    for (int v : flood.reached) reached[v] = 1;
    std::vector<int> h_next, dropped;
    for (int v : h)
      (reached[v] ? dropped : h_next).push_back(v);

    std::map<int, Bits> gone;
    for (int v : dropped) gone[v] = Bits::of_uint(1, 1);
    auto bc = broadcast_from_q(g, ov, gone, 1, cfg);
    out.report.merge(bc.report);
    std::vector<char> dropped_id(1ull << g.id_bits, 0);
    for (int v : dropped) dropped_id[g.ids[v]] = 1;
    for (int v = 0; v < g.n; ++v) {
      auto& k = act_known[v];
      k.erase(std::remove_if(k.begin(), k.end(),
                             [&](uint64_t id) { return dropped_id[id] != 0; }),
              k.end());
      if (p.check_oracles) {
        for (uint64_t id : k)
          if (bc.received[v].count(id))
            throw std::logic_error("stale active knowledge");
      }
    }

    if (p.check_oracles) {
      auto clauses =
          check_stage_clauses(g, s, h, m, h_next, delta_a, i, cap);
      if (!clauses.ok())
        throw std::logic_error("derandomized stage clause violated");
    }

    StageStats st;
    st.s = s;
    st.i = i;
    st.h_size = (int)h.size();
    st.m_size = (int)m.size();
    for (int v = 0; v < g.n; ++v)
      st.max_active_degree =
          std::max(st.max_active_degree, (int)act_known[v].size());
    st.exact_mode = fixed.exact;
    st.retries = fixed.retries;
    out.stats.push_back(st);

    for (int v : m) all_selected.push_back(v);
    for (int v : dropped) in_h[v] = 0;
    h = std::move(h_next);
    for (int v : h) in_h[v] = 1;
    out.last_m = m;
    out.last_h = h;
  }

  out.q = all_selected;
  for (int v : h) out.q.push_back(v);
  std::sort(out.q.begin(), out.q.end());
  out.overlay_on_q = sparsify_detail::restrict_overlay(g, ov, out.q);
  return out;
}

// ---------------------------------------------------------------------------
// Iterated sparsification for G^k (Q_0 ⊇ Q_1 ⊇ ... ⊇ Q_k).

struct SparsifyResult {
  std::vector<int> q;
  int k = 1;
  int claimed_cap = 0;
  int claimed_domination = 0;
  std::vector<std::vector<int>> per_iteration;  // Q_0 .. Q_k
  SparseOverlay final_overlay;                  // radius k+1 over Q_k
  RoundReport report;
  std::vector<StageStats> stats;
};

inline void verify_sparsify_invariants(const Graph& g, int s,
                                       const std::vector<int>& q0,
                                       const std::vector<int>& qs, int cap,
                                       int delta, int log_n) {
  auto c1 = check_degree_cap(g, qs, s, cap);
  if (!c1.pass) throw std::logic_error("sparsify invariant I1.1 violated");
  auto c2 = check_degree_cap(g, qs, s + 1, cap * delta);
  if (!c2.pass) throw std::logic_error("sparsify invariant I1.2 violated");
  auto d0 = nd_detail::multi_bfs(g, q0, g.n);
  auto ds = nd_detail::multi_bfs(g, qs, g.n);
  for (int v = 0; v < g.n; ++v) {
    if (d0[v] == kUnreachable) continue;
    if (ds[v] == kUnreachable || ds[v] > s * s + s + d0[v])
      throw std::logic_error("sparsify invariant I2 violated");
  }
  (void)log_n;
}

inline SparsifyResult sparsify_power(const Graph& g, int k,
                                     std::vector<int> q0,
                                     const SparsifyParams& p,
                                     const SimConfig& cfg,
                                     int delta_override = 0,
                                     int log_n_override = 0) {
  if (k < 1) throw std::invalid_argument("sparsify_power: k must be >= 1");
  std::sort(q0.begin(), q0.end());
  q0.erase(std::unique(q0.begin(), q0.end()), q0.end());
  const int log_n = log_n_override > 0 ? log_n_override : graph_log_n(g);
  const int delta = delta_override > 0 ? delta_override : g.max_degree();

  SparsifyResult res;
  res.k = k;
  res.claimed_cap = p.cap(log_n);
  res.claimed_domination = k * k + k;
  res.per_iteration.push_back(q0);

  std::vector<int> q = q0;
  SparseOverlay ov = overlay_radius1(g, q, cfg, &res.report);
  for (int s = 1; s <= k; ++s) {
    long long delta_a =
        s == 1 ? std::max(1, delta) : (long long)p.cap_c * delta * log_n;
    auto det = det_sparsify_g(g, s, ov, delta_a, p, cfg, log_n);
    res.report.merge(det.report);
    for (auto& st : det.stats) res.stats.push_back(st);
    q = det.q;
    res.per_iteration.push_back(q);
    ov = det.overlay_on_q;
    if (p.check_oracles)
      verify_sparsify_invariants(g, s, q0, q, res.claimed_cap, delta, log_n);
    ov = learn_ids_one_hop(
        g, ov, widen_for_overlay(cfg, g, 2 * ov.maxdeg_below), &res.report);
  }
  res.q = q;
  res.final_overlay = ov;
  return res;
}

// ---------------------------------------------------------------------------
// Sparsification inside a network decomposition (per color, per cluster,
// with the distance-k border observing).

inline void merge_parallel(RoundReport& into, const RoundReport& other) {
  into.rounds_used = std::max(into.rounds_used, other.rounds_used);
  into.max_bits_on_edge = std::max(into.max_bits_on_edge, other.max_bits_on_edge);
  into.total_bits += other.total_bits;
  into.violations.insert(into.violations.end(), other.violations.begin(),
                         other.violations.end());
  into.timed_out = into.timed_out || other.timed_out;
  into.nd_oracle_used = into.nd_oracle_used || other.nd_oracle_used;
}

inline SparsifyResult sparsify_with_nd(const Graph& g, int k,
                                       std::vector<int> q0,
                                       const SparsifyParams& p,
                                       const NetDecomp& nd,
                                       const SimConfig& cfg) {
  if (nd.separation < 2 * k + 1)
    throw std::invalid_argument("sparsify_with_nd: separation must be >= 2k+1");
  std::vector<int> domain(g.n);
  std::iota(domain.begin(), domain.end(), 0);
  auto ndcheck = verify_nd(g, nd, domain);
  if (!ndcheck.pass)
    throw std::invalid_argument("sparsify_with_nd: invalid decomposition: " +
                                ndcheck.failure);

  std::sort(q0.begin(), q0.end());
  const int log_n = graph_log_n(g);
  const int delta = std::max(1, g.max_degree());

  SparsifyResult res;
  res.k = k;
  res.claimed_cap = p.cap(log_n);
  res.claimed_domination = k * k + k;
  res.report.nd_oracle_used = true;

  std::vector<char> globally_active(g.n, 0);
  for (int v : q0) globally_active[v] = 1;
  std::vector<int> q_all;

  for (int color = 0; color < nd.num_colors; ++color) {
    RoundReport color_rep;
    std::vector<int> selected_this_color;
    for (int ci = 0; ci < nd.size(); ++ci) {
      if (nd.color[ci] != color) continue;
      std::vector<int> active_c;
      for (int v : nd.clusters[ci])
        if (globally_active[v]) active_c.push_back(v);
      if (active_c.empty()) continue;
      auto near = nd_detail::multi_bfs(g, nd.clusters[ci], k);
      std::vector<int> region;
      for (int v = 0; v < g.n; ++v)
        if (near[v] <= k) region.push_back(v);
      for (auto [u, v] : nd.steiner[ci]) {
        region.push_back(u);
        region.push_back(v);
      }
      auto sub = induced_subgraph(g, region);
      std::vector<int> active_sub;
      for (int v : active_c)
        active_sub.push_back((int)(std::lower_bound(sub.origin.begin(),
                                                    sub.origin.end(), v) -
                                   sub.origin.begin()));
      auto piece =
          sparsify_power(sub.graph, k, active_sub, p, cfg, delta, log_n);
      merge_parallel(color_rep, piece.report);
      for (int v : piece.q) selected_this_color.push_back(sub.origin[v]);
    }
    // Selected nodes deactivate globally active nodes within 2k hops.
    auto flood = flood_reach(g, selected_this_color, 2 * k, cfg);
    merge_parallel(color_rep, flood.report);
    for (int v : flood.reached) globally_active[v] = 0;
    for (int v : selected_this_color) q_all.push_back(v);
    res.report.rounds_used += color_rep.rounds_used;
    res.report.max_bits_on_edge =
        std::max(res.report.max_bits_on_edge, color_rep.max_bits_on_edge);
    res.report.total_bits += color_rep.total_bits;
    res.report.timed_out |= color_rep.timed_out;
    res.report.violations.insert(res.report.violations.end(),
                                 color_rep.violations.begin(),
                                 color_rep.violations.end());
  }
  std::sort(q_all.begin(), q_all.end());
  res.q = q_all;
  res.per_iteration.push_back(q0);
  res.per_iteration.push_back(q_all);

  if (p.check_oracles) {
    auto c1 = check_degree_cap(g, res.q, k, res.claimed_cap);
    if (!c1.pass) throw std::logic_error("nd sparsify cap violated");
    auto d0 = nd_detail::multi_bfs(g, q0, g.n);
    auto dq = nd_detail::multi_bfs(g, res.q, g.n);
    for (int v = 0; v < g.n; ++v) {
      if (d0[v] == kUnreachable) continue;
      if (dq[v] == kUnreachable || dq[v] > k * k + k + d0[v])
        throw std::logic_error("nd sparsify domination violated");
    }
  }
  return res;
}


inline StageState derand_stage(const Graph& g, int s, const StageState& st,
                               const SparsifyParams& p, const SimConfig& cfg,
                               int log_n) {
  StageState next;
  next.i = st.i + 1;
  next.delta_a = st.delta_a;
  next.r = st.r;
  if (st.h.empty()) return next;
  auto ov = build_overlay(g, st.h, s, widen_for_overlay(cfg, g, 0));
  auto out = det_sparsify_g(g, s, ov, st.delta_a, p, cfg, log_n,
                            /*first_stage=*/st.i, /*max_stages=*/1);
  next.m = out.last_m;
  next.h = out.last_h;
  return next;
}

}  // namespace psim
