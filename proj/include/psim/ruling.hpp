#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "psim/comm.hpp"
#include "psim/congest.hpp"
#include "psim/graph.hpp"
#include "psim/sparsify.hpp"
#include "psim/verify.hpp"

namespace psim {

struct RulingSetResult {
  std::vector<int> set;
  int alpha = 2;
  int beta = 1;
  RoundReport rounds;
  std::vector<std::vector<int>> digit_survivors;  // candidate set per digit
};

struct DistanceColoring {
  std::vector<uint64_t> colors;
  int k = 1;           // any two vertices within k hops differ
  uint64_t palette = 0;  // colors live in [palette]

  // Returns a violating pair if the coloring is not a valid distance-k
  // coloring of the given members.
  std::optional<std::pair<int, int>> find_violation(
      const Graph& g, const std::vector<int>& members) const {
    for (int v : members) {
      auto dist = bfs_distances(g, v, k);
      for (int w : members)
        if (w != v && dist[w] <= k && colors[v] == colors[w])
          return std::make_pair(v, w);
    }
    return std::nullopt;
  }
};

// IDs are globally unique, hence a distance-k coloring for every k.
inline DistanceColoring coloring_from_ids(const Graph& g) {
  DistanceColoring c;
  c.colors = g.ids;
  c.k = g.n;
  c.palette = 1ull << g.id_bits;
  return c;
}

namespace ruling_detail {

inline int digit_count(uint64_t palette, int base) {
  int m = 0;
  uint64_t v = 1;
  while (v < palette) {
    v *= base;
    ++m;
  }
  return m;
}

inline int digit_of(uint64_t color, int base, int digit) {
  uint64_t v = color;
  for (int i = 0; i < digit; ++i) v /= base;
  return (int)(v % base);
}

}  // namespace ruling_detail

// Base-b_digits sweep over the digits of a distance-k coloring, most
// significant digit first: per digit value, matching members beep to
// their distance-k neighborhood; members with a larger digit that hear a
// beep leave the candidate set for good.
inline RulingSetResult awerbuch_ruling_set(
    const Graph& g, int k, const DistanceColoring& coloring, int b_digits,
    const SimConfig& cfg, const std::vector<int>* domain = nullptr,
    bool trusted_coloring = false) {
  if (b_digits < 2) throw std::invalid_argument("awerbuch: base must be >= 2");
  if (k < 1) throw std::invalid_argument("awerbuch: k must be >= 1");
  std::vector<int> members;
  if (domain)
    members = *domain;
  else {
    members.resize(g.n);
    std::iota(members.begin(), members.end(), 0);
  }
  if (!trusted_coloring) {
    if (auto bad = coloring.find_violation(g, members))
      throw std::invalid_argument(
          "awerbuch: invalid distance-k coloring (vertices " +
          std::to_string(bad->first) + ", " + std::to_string(bad->second) +
          ")");
  }
  const int m = ruling_detail::digit_count(coloring.palette, b_digits);

  RulingSetResult res;
  res.alpha = k + 1;
  res.beta = k * m;
  std::vector<char> in_u(g.n, 0);
  for (int v : members) in_u[v] = 1;

  for (int digit = m - 1; digit >= 0; --digit) {
    for (int val = 0; val < b_digits; ++val) {
      std::vector<int> beepers;
      for (int v : members)
        if (in_u[v] &&
            ruling_detail::digit_of(coloring.colors[v], b_digits, digit) == val)
          beepers.push_back(v);
      if (beepers.empty()) continue;
      auto flood = flood_reach(g, beepers, k, cfg);
      res.rounds.merge(flood.report);
      for (int v : flood.reached)
        if (in_u[v] &&
            ruling_detail::digit_of(coloring.colors[v], b_digits, digit) > val)
          in_u[v] = 0;
    }
    std::vector<int> survivors;
    for (int v : members)
      if (in_u[v]) survivors.push_back(v);
    res.digit_survivors.push_back(std::move(survivors));
  }
  for (int v : members)
    if (in_u[v]) res.set.push_back(v);
  return res;
}

// ---------------------------------------------------------------------------
// Ball-tracking variant: beeps carry the beeper's ID (merged by minimum),
// a knocked-out candidate merges its ball into the knocker's, and the
// relay path of the winning beep joins the knocker's Steiner tree.

struct BallPartition {
  std::vector<int> r_set;
  std::vector<int> ball_owner;  // per vertex; -1 outside the domain
  std::map<int, std::vector<std::pair<int, int>>> steiner;  // owner -> edges
  int congestion = 0;          // measured
  int connectivity_claim = 1;  // balls are (alpha-1)-connected
};

namespace ruling_detail {

// Fixed-duration min-ID flood. Every node remembers, per beep ID it ever
// adopted, the neighbor that first delivered it; the knockout path of a
// winner is recovered by walking those providers backward.
struct MinBeepProgram {
  std::vector<uint64_t> nbrs;
  uint64_t self = 0;
  bool beeper = false;
  int id_bits = 0;
  int duration = 0;
  uint64_t best = ~0ull;  // smallest beep id seen (own if beeper)
  uint64_t announced = ~0ull;
  std::map<uint64_t, uint64_t> provider_for;  // beep id -> first sender

  void init(const LocalView& v) {
    nbrs = v.neighbor_ids;
    self = v.id;
    id_bits = v.id_bits;
    if (beeper) best = self;
  }
  bool halted() const { return announced == best; }
  void on_round(RoundApi& api) {
    // A beep sent in round r is readable in round r+1, so a beep heard in
    // round r originated at distance r-1: absorb through duration+1 and
    // relay through duration.
    if (api.round() <= duration + 1) {
      for (const auto& msg : api.inbox()) {
        uint64_t id = msg.payload.read_uint(0, id_bits);
        if (id < best) {
          best = id;
          provider_for.emplace(id, msg.sender_id);
        }
      }
    }
    if (best != announced && api.round() <= duration) {
      for (uint64_t nb : nbrs) api.send(nb, Bits::of_uint(best, id_bits));
    }
    announced = best;
  }
};

// Backward acknowledgement: a knocked-out node sends its winner's ID to
// the provider of that beep; relays forward along their own recorded
// providers until the originator is reached.
struct AckProgram {
  comm_detail::StreamCore core;
  const std::map<uint64_t, uint64_t>* provider_for = nullptr;
  uint64_t self = 0;
  int id_bits = 0, bw = 0;
  std::vector<uint64_t> to_start;                      // winner ids
  bool started = false;
  std::set<uint64_t> forwarded;
  std::vector<std::pair<uint64_t, uint64_t>> path_log;  // (root, next hop)

  void init(const LocalView& v) {
    core.init_streams(v);
    self = v.id;
    id_bits = v.id_bits;
    bw = v.bandwidth_bits;
  }
  bool halted() const { return started && core.queues_empty(); }
  void forward(uint64_t root) {
    if (root == self || forwarded.count(root)) return;
    auto it = provider_for->find(root);
    if (it == provider_for->end()) return;
    core.out_q[it->second].push(Bits::of_uint(root, id_bits));
    path_log.push_back({root, it->second});
    forwarded.insert(root);
  }
  void on_round(RoundApi& api) {
    core.absorb(api);
    if (!started) {
      for (uint64_t r : to_start) forward(r);
      started = true;
    }
    for (uint64_t nb : core.nbrs) {
      auto& q = core.in_q[nb];
      while (q.size() >= id_bits) forward(q.take(id_bits).read_uint(0, id_bits));
    }
    core.drain(api, bw);
  }
};

}  // namespace ruling_detail

inline std::pair<RulingSetResult, BallPartition> ball_ruling_set(
    const Graph& g, int alpha, const std::vector<int>& domain,
    const DistanceColoring& coloring, int b_digits, const SimConfig& cfg,
    bool trusted_coloring = true) {
  if (alpha < 2) throw std::invalid_argument("ball_ruling_set: alpha >= 2");
  const int kk = alpha - 1;
  if (!trusted_coloring) {
    if (auto bad = coloring.find_violation(g, domain))
      throw std::invalid_argument("ball_ruling_set: invalid coloring");
  }
  const int m = ruling_detail::digit_count(coloring.palette, b_digits);

  std::vector<char> in_u(g.n, 0), in_domain(g.n, 0);
  for (int v : domain) in_u[v] = in_domain[v] = 1;
  // Union-find over ball owners.
  std::vector<int> owner(g.n);
  std::iota(owner.begin(), owner.end(), 0);
  std::function<int(int)> find = [&](int v) {
    return owner[v] == v ? v : owner[v] = find(owner[v]);
  };
  std::map<int, std::vector<std::pair<int, int>>> tree_edges;

  RulingSetResult res;
  res.alpha = alpha;
  res.beta = kk * m;

  for (int digit = m - 1; digit >= 0; --digit) {
    for (int val = 0; val < b_digits; ++val) {
      std::vector<char> beeper(g.n, 0);
      bool any = false;
      for (int v : domain)
        if (in_u[v] &&
            ruling_detail::digit_of(coloring.colors[v], b_digits, digit) == val) {
          beeper[v] = 1;
          any = true;
        }
      if (!any) continue;
      auto flood = run_sim<ruling_detail::MinBeepProgram>(
          g, cfg, [&](int v, const LocalView&) {
            ruling_detail::MinBeepProgram p;
            p.beeper = beeper[v];
            p.duration = kk;
            return p;
          });
      res.rounds.merge(flood.report);

      // Knockouts and their acknowledgement paths.
      std::vector<std::vector<uint64_t>> acks(g.n);
      std::vector<int> knocked;
      for (int v : domain) {
        if (!in_u[v] || beeper[v]) continue;
        const auto& p = flood.programs[v];
        if (p.best == ~0ull) continue;
        if (ruling_detail::digit_of(coloring.colors[v], b_digits, digit) > val) {
          knocked.push_back(v);
          acks[v].push_back(p.best);
        }
      }
      if (!knocked.empty()) {
        auto ack = run_sim<ruling_detail::AckProgram>(
            g, cfg, [&](int v, const LocalView&) {
              ruling_detail::AckProgram p;
              p.provider_for = &flood.programs[v].provider_for;
              p.to_start = acks[v];
              return p;
            });
        res.rounds.merge(ack.report);
        for (int v = 0; v < g.n; ++v)
          for (auto& [root_id, next_id] : ack.programs[v].path_log)
            tree_edges[g.index_of_id(root_id)].push_back(
                {v, g.index_of_id(next_id)});
      }
      for (int v : knocked) {
        in_u[v] = 0;
        int winner = g.index_of_id(flood.programs[v].best);
        int a = find(v), b = find(winner);
        if (a != b) {
          owner[a] = b;
          auto& dst = tree_edges[b];
          auto it = tree_edges.find(a);
          if (it != tree_edges.end()) {
            dst.insert(dst.end(), it->second.begin(), it->second.end());
            tree_edges.erase(it);
          }
        }
      }
    }
  }

  BallPartition part;
  part.ball_owner.assign(g.n, -1);
  part.connectivity_claim = kk;
  for (int v : domain) {
    if (in_u[v]) res.set.push_back(v);
    part.ball_owner[v] = find(v);
  }
  part.r_set = res.set;
  std::map<std::pair<int, int>, int> edge_load;
  for (int r : res.set) {
    auto it = tree_edges.find(r);
    std::vector<std::pair<int, int>> edges;
    if (it != tree_edges.end()) {
      std::set<std::pair<int, int>> dedup;
      for (auto [u, v] : it->second)
        dedup.insert({std::min(u, v), std::max(u, v)});
      edges.assign(dedup.begin(), dedup.end());
    }
    for (auto& e : edges) edge_load[e]++;
    part.steiner[r] = std::move(edges);
  }
  for (auto& [e, c] : edge_load) part.congestion = std::max(part.congestion, c);
  return {res, part};
}

// Oracle bundle for a ball partition: disjoint cover of the domain, owner
// containment, and per-ball connectivity at the claimed power.
inline bool check_ball_partition(const Graph& g, const BallPartition& part,
                                 const std::vector<int>& domain) {
  std::vector<char> in_domain(g.n, 0);
  for (int v : domain) in_domain[v] = 1;
  std::map<int, std::vector<int>> balls;
  for (int v : domain) {
    if (part.ball_owner[v] < 0) return false;
    balls[part.ball_owner[v]].push_back(v);
  }
  for (auto& [r, members] : balls) std::sort(members.begin(), members.end());
  for (int v = 0; v < g.n; ++v)
    if (!in_domain[v] && part.ball_owner[v] != -1) return false;
  for (auto& [r, members] : balls) {
    if (!std::binary_search(members.begin(), members.end(), r)) return false;
    if (!is_k_connected(g, members, part.connectivity_claim)) return false;
  }
  for (int r : part.r_set)
    if (!balls.count(r)) return false;
  return balls.size() == part.r_set.size();
}

// ---------------------------------------------------------------------------
// Deterministic MIS by iterated local minima (the plug-in used where a
// derandomized MIS subroutine is called for).

struct GreedyMisProgram {
  LocalView view;
  int status = 0;  // 0 undecided, 1 in, 2 out
  int announced = -1;
  std::map<uint64_t, int> nbr_status;
  bool participates = true;
  int preset = 2;  // status taken by non-participants

  explicit GreedyMisProgram(const LocalView& v) : view(v) {
    for (uint64_t nb : view.neighbor_ids) nbr_status[nb] = 0;
  }
  void init(const LocalView&) {
    if (!participates) status = preset;
  }
  bool halted() const { return status != 0 && announced == status; }
  void on_round(RoundApi& api) {
    for (const auto& m : api.inbox())
      nbr_status[m.sender_id] = (int)m.payload.read_uint(0, 2);
    if (status == 0 && api.round() > 1) {
      bool any_in = false, blocked = false;
      for (auto& [nb, st] : nbr_status) {
        if (st == 1) any_in = true;
        if (st == 0 && nb < view.id) blocked = true;
      }
      if (any_in)
        status = 2;
      else if (!blocked)
        status = 1;
    }
    if (announced != status) {
      for (uint64_t nb : view.neighbor_ids)
        api.send(nb, Bits::of_uint((uint64_t)status, 2));
      announced = status;
    }
  }
};

struct MisOnOverlayResult {
  std::vector<int> set;
  RoundReport inner;
  RoundReport outer;
};

// Runs the deterministic MIS program on G^s[Q] through the overlay.
inline MisOnOverlayResult greedy_mis_on_power_subgraph(const Graph& g,
                                                       const SparseOverlay& ov,
                                                       const SimConfig& cfg) {
  SimConfig outer = widen_for_overlay(cfg, g, 2 * ov.maxdeg_below);
  auto sim = simulate_on_power_subgraph<GreedyMisProgram>(
      g, ov, cfg, outer, [](int, const LocalView& v) { return GreedyMisProgram(v); });
  MisOnOverlayResult out;
  out.inner = sim.inner_report;
  out.outer = sim.outer_report;
  for (size_t i = 0; i < sim.q.size(); ++i)
    if (sim.programs[i].status == 1) out.set.push_back(sim.q[i]);
  return out;
}

// Composition: sparsify at radius k-1, then any MIS algorithm
// on G^k[Q] through the communication tools. The MIS output is checked
// against the brute-force oracle before it is returned.
template <class MisRunner>
RulingSetResult ruling_via_sparsification(const Graph& g, int k,
                                          const SparsifyResult& spars,
                                          const SparseOverlay& overlay_k,
                                          const SimConfig& cfg,
                                          MisRunner&& run_mis) {
  if (overlay_k.radius != k)
    throw std::invalid_argument("ruling_via_sparsification: need radius-k overlay");
  RulingSetResult res;
  res.alpha = k + 1;
  res.beta = spars.claimed_domination + k;
  res.rounds.merge(spars.report);

  MisOnOverlayResult mis = run_mis(g, overlay_k, cfg);
  res.rounds.merge(mis.outer);
  res.set = mis.set;

  Graph pk = power_graph(g, k);
  auto induced = induced_subgraph(pk, spars.q);
  std::vector<int> mapped;
  for (int v : mis.set)
    mapped.push_back((int)(std::lower_bound(induced.origin.begin(),
                                            induced.origin.end(), v) -
                           induced.origin.begin()));
  if (!check_mis(induced.graph, mapped))
    throw std::logic_error("ruling_via_sparsification: MIS oracle failed");
  return res;
}

// ---------------------------------------------------------------------------
// KP12-style randomized sparsification step on G^k: geometric probability
// ramp, anonymous beeps, survivors of the final level join.

struct Kp12Result {
  std::vector<int> q;
  RoundReport report;
  int iterations = 0;
  int measured_max_degree = 0;  // in G^k[Q]
};

inline Kp12Result kp12_sparsify_step(const Graph& g, int k,
                                     const std::vector<int>& active,
                                     double f, uint64_t seed,
                                     const SimConfig& cfg) {
  if (f < 2) throw std::invalid_argument("kp12: f must be >= 2");
  Kp12Result out;
  if (active.empty()) return out;
  double delta_gk = 1;
  for (int i = 0; i < k; ++i)
    delta_gk = std::min<double>(delta_gk * std::max(1, g.max_degree()),
                                (double)g.n);
  std::vector<char> live(g.n, 0);
  for (int v : active) live[v] = 1;

  for (int j = 1;; ++j) {
    double p = std::min(1.0, std::pow(f, j) / std::max(1.0, delta_gk));
    std::vector<int> sampled;
    for (int v : active)
      if (live[v]) {
        CounterRng rng(seed, g.ids[v], (uint64_t)j);
        if (rng.uniform01() < p) sampled.push_back(v);
      }
    ++out.iterations;
    for (int v : sampled) {
      out.q.push_back(v);
      live[v] = 0;
    }
    auto flood = flood_reach(g, sampled, k, cfg);
    out.report.merge(flood.report);
    for (int v : flood.reached) live[v] = 0;
    if (p >= 1.0) break;
  }
  std::sort(out.q.begin(), out.q.end());

  auto induced = induced_subgraph(power_graph(g, k), out.q);
  out.measured_max_degree = induced.graph.max_degree();
  return out;
}

}  // namespace psim
