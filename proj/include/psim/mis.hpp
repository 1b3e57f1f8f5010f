#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "psim/congest.hpp"
#include "psim/graph.hpp"
#include "psim/ruling.hpp"
#include "psim/verify.hpp"

namespace psim {

struct MisResult {
  std::vector<int> set;
  RoundReport report;
  int steps = 0;
  // per-phase round counts for the shattering pipelines
  int pre_rounds = 0, ruling_rounds = 0, ballgraph_rounds = 0,
      post_rounds = 0;
};

struct ShatterOutcome {
  std::vector<int> in_set;
  std::vector<int> undecided;                 // B = allowed \ (I u N^k(I))
  std::vector<std::vector<int>> components;   // of G^k[B]
  RoundReport report;
  int steps = 0;
};

inline double power_degree_bound(const Graph& g, int k) {
  double d = 1;
  for (int i = 0; i < k; ++i)
    d = std::min<double>(d * std::max(1, g.max_degree()), (double)g.n);
  return std::max(2.0, d);
}

// ---------------------------------------------------------------------------
// Luby on G^k: per step, an undecided node joins iff its random value is
// the strict minimum among undecided distance-k neighbors, learned by a
// k-hop min flood; joiners alert their distance-k neighborhood. No node
// ever reads its G^k degree.

namespace mis_detail {

struct LubyGkProgram {
  LocalView view;
  int k = 1, x_bits = 16;
  int status = 0;  // 0 undecided, 1 in, 2 out
  int step_len = 0;
  // per step state
  uint64_t own_x = 0;
  std::pair<uint64_t, uint64_t> best_other{~0ull, ~0ull};
  std::pair<uint64_t, uint64_t> relay{~0ull, ~0ull};
  std::pair<uint64_t, uint64_t> relay_sent{~0ull, ~0ull};
  bool heard_join = false, join_sent = false;

  explicit LubyGkProgram(const LocalView& v) : view(v) {}
  void init(const LocalView&) { step_len = 2 * k + 2; }
  bool halted() const { return status != 0; }

  void send_pair(RoundApi& api, std::pair<uint64_t, uint64_t> p) {
    Bits b;
    b.append_uint(p.first, x_bits);
    b.append_uint(p.second, view.id_bits);
    for (uint64_t nb : view.neighbor_ids) api.send(nb, b);
  }

  int last_step = -1;
  void reset_step(int step) {
    if (step == last_step) return;
    last_step = step;
    best_other = {~0ull, ~0ull};
    relay = relay_sent = {~0ull, ~0ull};
    heard_join = false;
    join_sent = false;
  }
  void on_round(RoundApi& api) {
    int r0 = (int)((api.round() - 1) % step_len);
    reset_step((int)((api.round() - 1) / step_len));
    if (r0 == 0) {
      if (status == 0) {
        own_x = api.rng().next_bits(x_bits);
        relay = {own_x, view.id};
        send_pair(api, relay);
        relay_sent = relay;
      }
      return;
    }
    if (r0 <= k) {
      for (const auto& m : api.inbox()) {
        uint64_t x = m.payload.read_uint(0, x_bits);
        uint64_t id = m.payload.read_uint(x_bits, view.id_bits);
        std::pair<uint64_t, uint64_t> p{x, id};
        if (p < relay) relay = p;
        if (id != view.id && p < best_other) best_other = p;
      }
      if (r0 <= k - 1 && relay < relay_sent) {
        send_pair(api, relay);
        relay_sent = relay;
      }
      if (r0 == k && status == 0) {
        if (std::make_pair(own_x, view.id) < best_other) {
          status = 1;
          for (uint64_t nb : view.neighbor_ids)
            api.send(nb, Bits::of_uint(1, 1));
          join_sent = true;
        }
      }
      return;
    }
    // Joined-beep window: a beep heard in round r0 originated at distance
    // r0 - k, so it is only valid through r0 == 2k; relaying past 2k - 1
    // would push it beyond k hops.
    bool fresh = false;
    for (const auto& m : api.inbox())
      if (m.payload.size() == 1) fresh = true;
    if (fresh && !heard_join && r0 <= 2 * k) {
      heard_join = true;
      if (status == 0) status = 2;
      if (r0 <= 2 * k - 1 && !join_sent) {
        for (uint64_t nb : view.neighbor_ids) api.send(nb, Bits::of_uint(1, 1));
        join_sent = true;
      }
    }
  }
};

}  // namespace mis_detail

inline MisResult luby_gk(const Graph& g, int k, int c_exp, uint64_t seed,
                         SimConfig cfg,
                         const std::vector<int>* allowed = nullptr) {
  if (k < 1) throw std::invalid_argument("luby_gk: k must be >= 1");
  if (c_exp < 3) throw std::invalid_argument("luby_gk: c_exp must be >= 3");
  int x_bits = c_exp * ceil_log2(std::max<uint64_t>(2, g.n));
  cfg.rng_seed = seed;
  cfg.bandwidth_bits =
      std::max(cfg.resolve_bandwidth(g), x_bits + g.id_bits);
  std::vector<char> allow(g.n, 1);
  if (allowed) {
    allow.assign(g.n, 0);
    for (int v : *allowed) allow[v] = 1;
  }
  auto run = run_sim<mis_detail::LubyGkProgram>(
      g, cfg, [&](int v, const LocalView& view) {
        mis_detail::LubyGkProgram p(view);
        p.k = k;
        p.x_bits = x_bits;
        if (!allow[v]) p.status = 2;
        return p;
      });
  MisResult out;
  out.report = run.report;
  out.steps = (run.report.rounds_used + 2 * k + 1) / (2 * k + 2);
  for (int v = 0; v < g.n; ++v)
    if (run.programs[v].status == 1) out.set.push_back(v);
  return out;
}

// ---------------------------------------------------------------------------
// BeepingMIS on G^k. Beeps carry (ID, hops-left); every relay forwards at
// most two distinct-ID tuples per round (smallest IDs, maximum remaining
// hops), which lets a beeper distinguish foreign beeps from its own.
// Marking probability starts at 1/2, halves on hearing a beep and doubles
// (capped at 1/2) on silence.

namespace mis_detail {

struct BeepTuple {
  uint64_t id;
  int hops;
};

struct BeepingProgram {
  LocalView view;
  int k = 1, steps_cap = 0, hop_w = 1;
  int status = 0;
  double p_mark = 0.5;
  int step_len = 0;
  bool marked = false, heard_foreign = false, join_sent = false,
       heard_join = false;
  std::map<uint64_t, int> relay_pool;  // id -> max hops left (this round)

  explicit BeepingProgram(const LocalView& v) : view(v) {}
  void init(const LocalView&) {
    step_len = 2 * k + 2;
    hop_w = std::max(1, ceil_log2((uint64_t)k + 1));
  }
  bool halted() const {
    return status != 0 || (steps_cap > 0 && steps_done >= steps_cap);
  }
  int steps_done = 0;

  void send_tuples(RoundApi& api, const std::vector<BeepTuple>& ts) {
    Bits b;
    for (const auto& t : ts) {
      b.append_uint(t.id, view.id_bits);
      b.append_uint((uint64_t)t.hops, hop_w);
    }
    if (b.size() > 0)
      for (uint64_t nb : view.neighbor_ids) api.send(nb, b);
  }

  int last_step = -1;
  void reset_step(int step) {
    if (step == last_step) return;
    last_step = step;
    heard_foreign = false;
    join_sent = false;
    heard_join = false;
    marked = false;
    relay_pool.clear();
  }
  void on_round(RoundApi& api) {
    int r0 = (int)((api.round() - 1) % step_len);
    int tuple_w = view.id_bits + hop_w;
    reset_step((int)((api.round() - 1) / step_len));
    if (r0 == 0) {
      if (status == 0 && steps_done < steps_cap) {
        marked = api.rng().uniform01() < p_mark;
        if (marked && k >= 1)
          send_tuples(api, {{view.id, k - 1}});
      }
      return;
    }
    if (r0 <= k) {
      relay_pool.clear();
      for (const auto& m : api.inbox()) {
        for (int pos = 0; pos + tuple_w <= m.payload.size(); pos += tuple_w) {
          uint64_t id = m.payload.read_uint(pos, view.id_bits);
          int hops = (int)m.payload.read_uint(pos + view.id_bits, hop_w);
          if (id != view.id) heard_foreign = true;
          auto it = relay_pool.find(id);
          if (it == relay_pool.end() || it->second < hops)
            relay_pool[id] = hops;
        }
      }
      if (r0 <= k - 1 && !relay_pool.empty()) {
        // Two smallest distinct IDs, maximum hops-left, decremented.
        std::vector<BeepTuple> fwd;
        for (auto& [id, hops] : relay_pool) {
          if (hops >= 1) fwd.push_back({id, hops - 1});
          if (fwd.size() == 2) break;
        }
        send_tuples(api, fwd);
      }
      if (r0 == k && status == 0 && steps_done < steps_cap) {
        if (marked && !heard_foreign) {
          status = 1;
          for (uint64_t nb : view.neighbor_ids)
            api.send(nb, Bits::of_uint(1, 1));
          join_sent = true;
        }
        p_mark = heard_foreign ? p_mark / 2 : std::min(0.5, 2 * p_mark);
      }
      return;
    }
    // Joined-beep window (anonymous: joiners are > k apart). Beeps heard
    // after r0 == 2k would have travelled more than k hops.
    bool fresh = false;
    for (const auto& m : api.inbox())
      if (m.payload.size() == 1) fresh = true;
    if (fresh && !heard_join && r0 <= 2 * k) {
      heard_join = true;
      if (status == 0) status = 2;
      if (r0 <= 2 * k - 1 && !join_sent) {
        for (uint64_t nb : view.neighbor_ids) api.send(nb, Bits::of_uint(1, 1));
        join_sent = true;
      }
    }
    if (r0 == 2 * k + 1) steps_done = last_step + 1;
  }
};

}  // namespace mis_detail

inline ShatterOutcome beeping_mis_gk(const Graph& g, int k, int steps,
                                     uint64_t seed, SimConfig cfg,
                                     const std::vector<int>* allowed = nullptr) {
  if (k < 1) throw std::invalid_argument("beeping_mis_gk: k must be >= 1");
  cfg.rng_seed = seed;
  std::vector<char> allow(g.n, 1);
  if (allowed) {
    allow.assign(g.n, 0);
    for (int v : *allowed) allow[v] = 1;
  }
  auto run = run_sim<mis_detail::BeepingProgram>(
      g, cfg, [&](int v, const LocalView& view) {
        mis_detail::BeepingProgram p(view);
        p.k = k;
        p.steps_cap = steps;
        if (!allow[v]) p.status = 2;
        return p;
      });
  ShatterOutcome out;
  out.report = run.report;
  out.steps = steps;
  std::vector<int> undecided;
  for (int v = 0; v < g.n; ++v) {
    if (run.programs[v].status == 1) out.in_set.push_back(v);
    if (run.programs[v].status == 0 && allow[v]) undecided.push_back(v);
  }
  // B excludes anything within k of the independent set.
  auto dist = nd_detail::multi_bfs(g, out.in_set, k);
  for (int v : undecided)
    if (dist[v] > k) out.undecided.push_back(v);
  Graph pk = power_graph(g, k);
  out.components = connected_components(pk, out.undecided);
  return out;
}

// Pre-shattering phase: ceil(c_pre * s_conn * log2(Delta^k)) beeping steps.
inline ShatterOutcome preshatter(const Graph& g, int k, int s_conn, int c_pre,
                                 uint64_t seed, const SimConfig& cfg,
                                 const std::vector<int>* allowed = nullptr) {
  double dk = power_degree_bound(g, k);
  int steps =
      (int)std::ceil((double)c_pre * s_conn * std::log2(std::max(2.0, dk)));
  return beeping_mis_gk(g, k, std::max(1, steps), seed, cfg, allowed);
}

// ---------------------------------------------------------------------------
// Distance-k ball graph: k-hop searches from every ball claim disjoint
// borders (first arrival, smallest root ID); the resulting ball graph
// satisfies dist_G(Ball(v), Ball(w)) <= k  =>  dist_B(v, w) <= k.

struct BallGraph {
  Graph graph;                  // virtual graph over the ruling set
  std::vector<int> roots;       // ball-graph node -> g vertex
  std::vector<int> plus_owner;  // g vertex -> owning root (or -1)
  std::map<int, std::vector<std::pair<int, int>>> steiner;
  RoundReport report;
};

namespace mis_detail {

// First-arrival claim flood: sources emit their owner's ID; non-domain
// nodes adopt the smallest first-round arrival, then forward once.
struct ClaimProgram {
  std::vector<uint64_t> nbrs;
  bool origin = false, barrier = false;
  uint64_t own_root = 0;
  int id_bits = 0, duration = 0;
  uint64_t adopted = ~0ull;
  uint64_t via = ~0ull;
  bool sent = false;

  void init(const LocalView& v) {
    nbrs = v.neighbor_ids;
    id_bits = v.id_bits;
  }
  bool halted() const { return sent || (!origin && adopted == ~0ull); }
  void on_round(RoundApi& api) {
    if (origin) {
      if (!sent) {
        for (uint64_t nb : nbrs) api.send(nb, Bits::of_uint(own_root, id_bits));
        sent = true;
      }
      return;
    }
    if (barrier) return;  // domain nodes neither join nor forward
    if (adopted == ~0ull && api.round() <= duration + 1) {
      for (const auto& m : api.inbox()) {
        uint64_t root = m.payload.read_uint(0, id_bits);
        if (adopted == ~0ull || root < adopted) {
          adopted = root;
          via = m.sender_id;
        }
      }
    }
    if (adopted != ~0ull && !sent) {
      if (api.round() <= duration)
        for (uint64_t nb : nbrs) api.send(nb, Bits::of_uint(adopted, id_bits));
      sent = true;
    }
  }
};

}  // namespace mis_detail

inline BallGraph build_distance_k_ballgraph(const Graph& g,
                                            const BallPartition& part, int k,
                                            const SimConfig& cfg) {
  BallGraph out;
  out.plus_owner = part.ball_owner;
  auto run = run_sim<mis_detail::ClaimProgram>(
      g, cfg, [&](int v, const LocalView&) {
        mis_detail::ClaimProgram p;
        p.duration = k;
        if (part.ball_owner[v] >= 0) {
          p.origin = true;
          p.barrier = true;
          p.own_root = g.ids[part.ball_owner[v]];
        }
        return p;
      });
  out.report = run.report;
  out.steiner = part.steiner;
  for (int v = 0; v < g.n; ++v) {
    const auto& p = run.programs[v];
    if (!p.origin && p.adopted != ~0ull) {
      out.plus_owner[v] = g.index_of_id(p.adopted);
      out.steiner[out.plus_owner[v]].push_back({v, g.index_of_id(p.via)});
    }
  }
  // Virtual graph on the ruling set.
  std::map<int, int> node_of;
  for (int r : part.r_set) {
    node_of[r] = (int)out.roots.size();
    out.roots.push_back(r);
  }
  std::set<std::pair<int, int>> edges;
  for (int u = 0; u < g.n; ++u) {
    if (out.plus_owner[u] < 0) continue;
    for (int w : g.adj[u]) {
      if (out.plus_owner[w] < 0) continue;
      int a = node_of.at(out.plus_owner[u]), b = node_of.at(out.plus_owner[w]);
      if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  out.graph.n = (int)out.roots.size();
  out.graph.adj.assign(out.graph.n, {});
  out.graph.ids.resize(out.graph.n);
  for (int i = 0; i < out.graph.n; ++i) out.graph.ids[i] = g.ids[out.roots[i]];
  out.graph.id_bits = g.id_bits;
  for (auto [a, b] : edges) {
    out.graph.adj[a].push_back(b);
    out.graph.adj[b].push_back(a);
  }
  for (auto& a : out.graph.adj) std::sort(a.begin(), a.end());
  out.graph.rebuild_id_index();
  return out;
}

// Oracle for the distance-k ball-graph property (implication direction).
inline bool check_distance_k_ballgraph(const Graph& g, const BallGraph& bg,
                                       const BallPartition& part, int k) {
  int nr = (int)bg.roots.size();
  std::map<int, int> node_of;
  for (int i = 0; i < nr; ++i) node_of[bg.roots[i]] = i;
  auto bg_dist = all_pairs_distances(bg.graph);
  for (int i = 0; i < nr; ++i) {
    std::vector<int> ball_i;
    for (int v = 0; v < g.n; ++v)
      if (part.ball_owner[v] == bg.roots[i]) ball_i.push_back(v);
    auto dist = nd_detail::multi_bfs(g, ball_i, k);
    for (int j = 0; j < nr; ++j) {
      if (i == j) continue;
      bool close = false;
      for (int v = 0; v < g.n; ++v)
        if (part.ball_owner[v] == bg.roots[j] && dist[v] <= k) close = true;
      if (close && bg_dist[i][j] > k) return false;
    }
  }
  return true;
}

// Harness check: an (alpha, beta)-ruling set of an s-connected
// set is alpha-independent and (s + 2 beta)-connected.
inline bool check_54ruling_connectivity(const Graph& g,
                                        const std::vector<int>& u_set,
                                        const std::vector<int>& r_subset,
                                        int alpha, int beta, int s_conn) {
  if (!is_k_connected(g, u_set, s_conn)) return true;  // precondition gate
  auto rc = check_ruling_set(g, r_subset, alpha, beta, &u_set);
  if (!rc.pass) return true;  // not an (alpha, beta)-ruling set of u_set
  if (!rc.independent) return false;
  return is_k_connected(g, r_subset, s_conn + 2 * beta);
}

}  // namespace psim
