#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "psim/bits.hpp"
#include "psim/graph.hpp"
#include "psim/rng.hpp"

namespace psim {

// Round-synchronous message passing with a hard per-edge, per-direction,
// per-round bit budget. Local computation is unbounded and free; only
// rounds and bits are metered.

struct SimConfig {
  int bandwidth_bits = 0;  // 0 -> c_bw * ceil(log2 n)
  int c_bw = 4;
  uint64_t rng_seed = 1;
  int round_limit = 1 << 20;
  bool trace = false;
  bool expose_diameter = false;  // capability flag; off by default

  int resolve_bandwidth(const Graph& g) const {
    if (bandwidth_bits > 0) return bandwidth_bits;
    return c_bw * ceil_log2(std::max<uint64_t>(2, g.n));
  }
};

struct Violation {
  int round;
  int from, to;  // vertex indices
  int bits;
  int budget;
};

struct RoundReport {
  int rounds_used = 0;
  int max_bits_on_edge = 0;
  long long total_bits = 0;
  std::vector<Violation> violations;
  bool timed_out = false;
  bool nd_oracle_used = false;

  bool clean() const { return violations.empty() && !timed_out; }

  void merge(const RoundReport& o) {
    rounds_used += o.rounds_used;
    max_bits_on_edge = std::max(max_bits_on_edge, o.max_bits_on_edge);
    total_bits += o.total_bits;
    violations.insert(violations.end(), o.violations.begin(),
                      o.violations.end());
    timed_out = timed_out || o.timed_out;
    nd_oracle_used = nd_oracle_used || o.nd_oracle_used;
  }
};

struct LocalView {
  int vertex = -1;  // engine bookkeeping; programs should key on id
  uint64_t id = 0;
  std::vector<uint64_t> neighbor_ids;  // ascending
  int n = 0;
  int max_degree = 0;
  int id_bits = 0;
  int bandwidth_bits = 0;
  int diameter = -1;  // -1 unless SimConfig::expose_diameter

  int degree() const { return (int)neighbor_ids.size(); }
};

struct Incoming {
  uint64_t sender_id;
  Bits payload;
};

struct TraceMsg {
  int round;
  int from, to;
  int bits;
};

class RoundApi {
 public:
  RoundApi(int round, const std::vector<Incoming>* inbox, CounterRng* rng)
      : round_(round), inbox_(inbox), rng_(rng) {}

  int round() const { return round_; }
  const std::vector<Incoming>& inbox() const { return *inbox_; }
  CounterRng& rng() { return *rng_; }

  // Sends to a neighbor, addressed by its ID.
  void send(uint64_t neighbor_id, Bits payload) {
    out_.push_back({neighbor_id, std::move(payload)});
  }

  std::vector<std::pair<uint64_t, Bits>> take_out() { return std::move(out_); }

 private:
  int round_;
  const std::vector<Incoming>* inbox_;
  CounterRng* rng_;
  std::vector<std::pair<uint64_t, Bits>> out_;
};

template <class P>
struct RunResult {
  std::vector<P> programs;
  std::vector<LocalView> views;
  RoundReport report;
  std::vector<TraceMsg> trace;
};

inline std::vector<LocalView> make_views(const Graph& g, const SimConfig& cfg) {
  int bw = cfg.resolve_bandwidth(g);
  int delta = g.max_degree();
  int diam = cfg.expose_diameter ? graph_diameter(g) : -1;
  std::vector<LocalView> views(g.n);
  for (int v = 0; v < g.n; ++v) {
    LocalView& lv = views[v];
    lv.vertex = v;
    lv.id = g.ids[v];
    for (int w : g.adj[v]) lv.neighbor_ids.push_back(g.ids[w]);
    std::sort(lv.neighbor_ids.begin(), lv.neighbor_ids.end());
    lv.n = g.n;
    lv.max_degree = delta;
    lv.id_bits = g.id_bits;
    lv.bandwidth_bits = bw;
    lv.diameter = diam;
  }
  return views;
}

// Runs per-node programs in lockstep. P must provide:
//   void init(const LocalView&);
//   void on_round(RoundApi&);
//   bool halted() const;
// A halted node is passive: it is woken (on_round called) whenever its
// inbox is non-empty. The run ends when every node is halted and no
// message is in flight, or when round_limit is hit (timed_out).
//
// Messages sent in round r are readable exactly in round r+1, sorted by
// sender ID. Per-node randomness is keyed by (rng_seed, node ID, round).
template <class P, class Factory>
RunResult<P> run_sim(const Graph& g, const SimConfig& cfg, Factory&& make) {
  RunResult<P> result;
  result.views = make_views(g, cfg);
  const int bw = g.n > 0 ? result.views[0].bandwidth_bits
                         : cfg.resolve_bandwidth(g);

  result.programs.reserve(g.n);
  for (int v = 0; v < g.n; ++v) result.programs.push_back(make(v, result.views[v]));
  for (int v = 0; v < g.n; ++v) result.programs[v].init(result.views[v]);

  std::vector<std::vector<Incoming>> inbox(g.n), next_inbox(g.n);
  std::vector<int> edge_bits;  // per directed edge slot, reset each round
  std::vector<int> offset(g.n + 1, 0);
  for (int v = 0; v < g.n; ++v) offset[v + 1] = offset[v] + g.degree(v);
  edge_bits.assign(offset[g.n], 0);

  RoundReport& rep = result.report;
  bool in_flight = false;

  for (int round = 1;; ++round) {
    bool all_halted = true;
    for (int v = 0; v < g.n; ++v)
      if (!result.programs[v].halted()) {
        all_halted = false;
        break;
      }
    if (all_halted && !in_flight) break;
    if (round > cfg.round_limit) {
      rep.timed_out = true;
      break;
    }

    rep.rounds_used = round;
    std::fill(edge_bits.begin(), edge_bits.end(), 0);
    in_flight = false;
    bool aborted = false;

    for (int v = 0; v < g.n && !aborted; ++v) {
      P& prog = result.programs[v];
      if (prog.halted() && inbox[v].empty()) continue;
      CounterRng rng(cfg.rng_seed, g.ids[v], (uint64_t)round);
      RoundApi api(round, &inbox[v], &rng);
      prog.on_round(api);
      for (auto& [to_id, payload] : api.take_out()) {
        int adj_pos = -1;
        const auto& a = g.adj[v];
        for (int i = 0; i < (int)a.size(); ++i)
          if (g.ids[a[i]] == to_id) {
            adj_pos = i;
            break;
          }
        if (adj_pos < 0)
          throw std::out_of_range("send: destination is not a neighbor");
        int w = a[adj_pos];
        int slot = offset[v] + adj_pos;
        edge_bits[slot] += payload.size();
        rep.total_bits += payload.size();
        rep.max_bits_on_edge = std::max(rep.max_bits_on_edge, edge_bits[slot]);
        if (edge_bits[slot] > bw) {
          rep.violations.push_back({round, v, w, edge_bits[slot], bw});
          aborted = true;
          break;
        }
        if (cfg.trace) result.trace.push_back({round, v, w, payload.size()});
        next_inbox[w].push_back({g.ids[v], std::move(payload)});
        in_flight = true;
      }
    }
    if (aborted) break;

    for (int v = 0; v < g.n; ++v) {
      inbox[v] = std::move(next_inbox[v]);
      next_inbox[v].clear();
      std::stable_sort(
          inbox[v].begin(), inbox[v].end(),
          [](const Incoming& a, const Incoming& b) { return a.sender_id < b.sender_id; });
    }
  }
  return result;
}

// Convenience: factory from the program's LocalView constructor.
template <class P>
RunResult<P> run_sim(const Graph& g, const SimConfig& cfg) {
  return run_sim<P>(g, cfg, [](int, const LocalView& v) { return P(v); });
}


// ---------------------------------------------------------------------------
// Bounded flood of an anonymous flag from a source set. Flags carry only a
// remaining-hop counter; concurrent flags merge by keeping the maximum.
// Returns the set of vertices reached (sources included).

struct FloodResult {
  std::vector<int> reached;  // sorted vertex indices
  RoundReport report;
};

namespace detail {

struct FloodProgram {
  std::vector<uint64_t> nbrs;
  int best = -1;  // remaining hops known at this node; depth at sources
  int sent = -1;  // best value already forwarded
  int hop_w = 1;

  void init(const LocalView& v) { nbrs = v.neighbor_ids; }
  bool halted() const { return sent >= best; }
  void on_round(RoundApi& api) {
    for (const auto& m : api.inbox()) {
      int hl = (int)m.payload.read_uint(0, hop_w);
      best = std::max(best, hl);
    }
    if (best > sent) {
      if (best - 1 >= 0)
        for (uint64_t nb : nbrs)
          api.send(nb, Bits::of_uint((uint64_t)(best - 1), hop_w));
      sent = best;
    }
  }
};

}  // namespace detail

inline FloodResult flood_reach(const Graph& g, const std::vector<int>& sources,
                               int depth, const SimConfig& cfg) {
  FloodResult out;
  if (depth < 0) return out;
  std::vector<char> is_src(g.n, 0);
  for (int v : sources) is_src[v] = 1;
  int hop_w = std::max(1, ceil_log2((uint64_t)depth + 2));
  auto run = run_sim<detail::FloodProgram>(g, cfg, [&](int v, const LocalView&) {
    detail::FloodProgram p;
    p.hop_w = hop_w;
    if (is_src[v]) p.best = depth;
    return p;
  });
  out.report = run.report;
  for (int v = 0; v < g.n; ++v) {
    const auto& p = run.programs[v];
    if (is_src[v] || p.best >= 0) out.reached.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Leader election + spanning BFS tree (min-ID token flood).

struct SpanningTreeResult {
  int root = -1;          // vertex index of the min-ID root
  BfsTree tree;           // parent forest over all reached vertices
  std::vector<int> roots; // one per component
  bool connected = true;
  bool component_error = false;  // disconnected without per-component opt-in
  RoundReport report;
};

namespace detail {

struct LeaderFloodProgram {
  uint64_t best_root;
  uint64_t parent_id;
  bool has_parent = false;
  bool announce = false;
  int id_bits;
  uint64_t self;

  explicit LeaderFloodProgram(const LocalView& v) {
    self = v.id;
    best_root = v.id;
    id_bits = v.id_bits;
    announce = true;
  }
  void init(const LocalView&) {}
  bool halted() const { return !announce; }
  void on_round(RoundApi& api) {
    for (const auto& msg : api.inbox()) {
      uint64_t root = msg.payload.read_uint(0, id_bits);
      if (root < best_root) {
        best_root = root;
        parent_id = msg.sender_id;
        has_parent = true;
        announce = true;
      }
    }
    if (announce) {
      // Token flood: forward the best-known root to every neighbor.
      Bits b = Bits::of_uint(best_root, id_bits);
      announce = false;
      for (uint64_t nb : neighbor_cache) api.send(nb, b);
    }
  }
  std::vector<uint64_t> neighbor_cache;
};

}  // namespace detail

inline SpanningTreeResult leader_spanning_tree(const Graph& g,
                                               SimConfig cfg = {},
                                               bool per_component = false) {
  SpanningTreeResult out;
  if (g.n == 0) return out;
  auto run = run_sim<detail::LeaderFloodProgram>(
      g, cfg, [&](int, const LocalView& view) {
        detail::LeaderFloodProgram p(view);
        p.neighbor_cache = view.neighbor_ids;
        return p;
      });
  out.report = run.report;
  out.tree.parent.assign(g.n, -2);
  out.tree.hop.assign(g.n, kUnreachable);
  for (int v = 0; v < g.n; ++v) {
    const auto& p = run.programs[v];
    if (p.has_parent)
      out.tree.parent[v] = g.index_of_id(p.parent_id);
    else {
      out.tree.parent[v] = -1;
      out.roots.push_back(v);
    }
  }
  std::sort(out.roots.begin(), out.roots.end(),
            [&](int a, int b) { return g.ids[a] < g.ids[b]; });
  out.root = out.roots.empty() ? -1 : out.roots[0];
  out.connected = out.roots.size() <= 1;
  out.component_error = !out.connected && !per_component;
  // Depths host-side from parents.
  std::function<int(int)> depth_of = [&](int v) -> int {
    if (out.tree.hop[v] != kUnreachable) return out.tree.hop[v];
    if (out.tree.parent[v] == -1) return out.tree.hop[v] = 0;
    return out.tree.hop[v] = depth_of(out.tree.parent[v]) + 1;
  };
  for (int v = 0; v < g.n; ++v) {
    depth_of(v);
    out.tree.depth = std::max(out.tree.depth, out.tree.hop[v]);
  }
  out.tree.root = out.root;
  return out;
}

}  // namespace psim
