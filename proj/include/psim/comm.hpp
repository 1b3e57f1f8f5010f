#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "psim/congest.hpp"
#include "psim/graph.hpp"

namespace psim {

// Distributed knowledge about a sparse set Q: every vertex knows the IDs in
// N^radius(v,Q), each member of Q has a BFS tree of depth radius, and every
// vertex remembers the sets its neighbors reported at smaller radii. The
// degree bounds are inclusive (a member counts itself), which is what the
// tree-load argument needs.
struct SparseOverlay {
  std::vector<int> q;  // sorted vertex indices
  int radius = 0;
  int maxdeg_at = 0;     // bound on |({v} u N^radius(v)) ∩ Q|
  int maxdeg_below = 0;  // bound on |({v} u N^{radius-1}(v)) ∩ Q|
  std::vector<BfsTree> trees;                    // aligned with q
  std::vector<std::vector<uint64_t>> known;      // per vertex, sorted IDs
  // nbr_known_at[r][v][adj_pos] = N^r(neighbor, Q) as reported to v.
  std::vector<std::vector<std::vector<std::vector<uint64_t>>>> nbr_layers;

  bool in_q(int v) const {
    return std::binary_search(q.begin(), q.end(), v);
  }

  const std::vector<uint64_t>& neighbor_known(int r, int v, int adj_pos) const {
    static const std::vector<uint64_t> empty;
    if (r <= 0 || r > (int)nbr_layers.size()) return empty;
    return nbr_layers[r - 1][v][adj_pos];
  }
};

class OverlayInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace comm_detail {

// FIFO bit queue; senders drain up to bandwidth bits per round per edge and
// receivers reassemble fixed-width records from the stream.
class BitQueue {
 public:
  void push(const Bits& b) {
    for (int i = 0; i < b.size(); ++i) bits_.push_back(b.bit(i));
  }
  Bits pop(int max_bits) {
    Bits out;
    while (!bits_.empty() && out.size() < max_bits) {
      out.append_bit(bits_.front());
      bits_.pop_front();
    }
    return out;
  }
  int size() const { return (int)bits_.size(); }
  bool empty() const { return bits_.empty(); }
  uint64_t peek_uint(int width) const {
    uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      if (bits_[i]) v |= 1ull << i;
    return v;
  }
  Bits take(int width) {
    Bits out;
    for (int i = 0; i < width; ++i) {
      out.append_bit(bits_.front());
      bits_.pop_front();
    }
    return out;
  }

 private:
  std::deque<bool> bits_;
};

struct TreeLocalInfo {
  uint64_t root_id;
  int depth;
  uint64_t parent_id;  // undefined when depth == 0
  std::vector<uint64_t> children;
};

// Per-vertex local views of the overlay trees, sorted by root id.
inline std::vector<std::vector<TreeLocalInfo>> tree_locals(
    const Graph& g, const SparseOverlay& ov) {
  std::vector<std::vector<TreeLocalInfo>> out(g.n);
  for (size_t qi = 0; qi < ov.q.size(); ++qi) {
    const BfsTree& t = ov.trees[qi];
    auto children = t.children();
    for (int v = 0; v < g.n; ++v) {
      if (!t.is_member(v)) continue;
      TreeLocalInfo info;
      info.root_id = g.ids[ov.q[qi]];
      info.depth = t.hop[v];
      info.parent_id = t.parent[v] >= 0 ? g.ids[t.parent[v]] : 0;
      for (int c : children[v]) info.children.push_back(g.ids[c]);
      std::sort(info.children.begin(), info.children.end());
      out[v].push_back(std::move(info));
    }
  }
  for (auto& list : out)
    std::sort(list.begin(), list.end(),
              [](const TreeLocalInfo& a, const TreeLocalInfo& b) {
                return a.root_id < b.root_id;
              });
  return out;
}

// Generic stream node: queues outgoing bits per neighbor, drains up to the
// bandwidth each round, and buffers incoming bits per neighbor.
struct StreamCore {
  std::vector<uint64_t> nbrs;  // ascending
  std::unordered_map<uint64_t, BitQueue> out_q;
  std::unordered_map<uint64_t, BitQueue> in_q;

  void init_streams(const LocalView& v) {
    nbrs = v.neighbor_ids;
    for (uint64_t nb : nbrs) {
      out_q[nb];
      in_q[nb];
    }
  }
  void absorb(RoundApi& api) {
    for (const auto& m : api.inbox()) in_q[m.sender_id].push(m.payload);
  }
  void drain(RoundApi& api, int bandwidth) {
    for (uint64_t nb : nbrs) {
      auto& q = out_q[nb];
      if (q.empty()) continue;
      api.send(nb, q.pop(bandwidth));
    }
  }
  bool queues_empty() const {
    for (const auto& [k, q] : out_q)
      if (!q.empty()) return false;
    return true;
  }
};

}  // namespace comm_detail

// ---------------------------------------------------------------------------
// Radius-1 overlay: one round of Q-membership exchange; depth-1 trees.

inline SparseOverlay overlay_radius1(const Graph& g, std::vector<int> q,
                                     const SimConfig& cfg,
                                     RoundReport* acc = nullptr) {
  std::sort(q.begin(), q.end());

  struct MembershipProgram {
    comm_detail::StreamCore core;
    bool member = false;
    bool sent = false;
    std::vector<uint64_t> heard;  // ids of neighbors in Q
    void init(const LocalView& v) { core.init_streams(v); }
    bool halted() const { return sent; }
    void on_round(RoundApi& api) {
      for (const auto& m : api.inbox())
        if (m.payload.read_uint(0, 1)) heard.push_back(m.sender_id);
      if (!sent) {
        for (uint64_t nb : core.nbrs)
          api.send(nb, Bits::of_uint(member ? 1 : 0, 1));
        sent = true;
      }
    }
  };

  std::vector<char> in_q(g.n, 0);
  for (int v : q) in_q[v] = 1;
  auto run = run_sim<MembershipProgram>(
      g, cfg, [&](int v, const LocalView&) {
        MembershipProgram p;
        p.member = in_q[v];
        return p;
      });
  if (acc) acc->merge(run.report);

  SparseOverlay ov;
  ov.q = q;
  ov.radius = 1;
  for (int v = 0; v < g.n; ++v) {
    auto& h = run.programs[v].heard;
    std::sort(h.begin(), h.end());
    ov.known.push_back(h);
  }
  for (int x : q) ov.trees.push_back(bfs_tree(g, x, 1));
  int at = 0;
  for (int v = 0; v < g.n; ++v)
    at = std::max(at, (int)ov.known[v].size() + (in_q[v] ? 1 : 0));
  ov.maxdeg_at = at;
  ov.maxdeg_below = 1;
  return ov;
}

// ---------------------------------------------------------------------------
// Learning one more hop of Q-IDs and extending the trees (pipelined ID
// lists followed by confirmation lists; parent ties resolved toward the
// smallest neighbor ID).

inline SparseOverlay learn_ids_one_hop(const Graph& g, const SparseOverlay& ov,
                                       const SimConfig& cfg,
                                       RoundReport* acc = nullptr) {
  const int a = g.id_bits;
  for (int v = 0; v < g.n; ++v)
    if ((int)ov.known[v].size() + (ov.in_q(v) ? 1 : 0) > ov.maxdeg_at)
      throw OverlayInvariantError("overlay degree bound violated");
  const int count_w = ceil_log2(ov.maxdeg_at + 2);

  struct LearnProgram {
    comm_detail::StreamCore core;
    const std::vector<uint64_t>* my_known;
    uint64_t self;
    int a, count_w;
    // incoming state per neighbor
    struct NbrState {
      int phase = 0;  // 0: awaiting list count, 1: list, 2: confirm count, 3: confirms, 4: done
      int expect = 0;
      std::vector<uint64_t> list;
      std::vector<uint64_t> confirms;
    };
    std::unordered_map<uint64_t, NbrState> st;
    bool lists_published = false;
    bool confirms_published = false;
    std::vector<std::pair<uint64_t, uint64_t>> adopted;  // (root, via neighbor)

    void init(const LocalView& v) {
      core.init_streams(v);
      self = v.id;
      for (uint64_t nb : core.nbrs) st[nb];
    }
    bool halted() const {
      if (!lists_published || !confirms_published) return false;
      if (!core.queues_empty()) return false;
      for (const auto& [nb, s] : st)
        if (s.phase != 4) return false;
      return true;
    }
    void on_round(RoundApi& api) {
      core.absorb(api);
      for (uint64_t nb : core.nbrs) {
        auto& q = core.in_q[nb];
        auto& s = st[nb];
        bool progressed = true;
        while (progressed) {
          progressed = false;
          if ((s.phase == 0 || s.phase == 2) && q.size() >= count_w) {
            s.expect = (int)q.take(count_w).read_uint(0, count_w);
            s.phase++;
            if (s.expect == 0) s.phase++;  // empty list
            progressed = true;
          } else if ((s.phase == 1 || s.phase == 3) && q.size() >= a) {
            uint64_t id = q.take(a).read_uint(0, a);
            (s.phase == 1 ? s.list : s.confirms).push_back(id);
            if ((int)(s.phase == 1 ? s.list : s.confirms).size() == s.expect)
              s.phase++;
            progressed = true;
          }
        }
      }
      if (!lists_published) {
        for (uint64_t nb : core.nbrs) {
          Bits b = Bits::of_uint(my_known->size(), count_w);
          for (uint64_t id : *my_known) b.append_uint(id, a);
          core.out_q[nb].push(b);
        }
        lists_published = true;
      }
      if (!confirms_published && lists_done()) {
        // New roots: in some neighbor list, not already known, not self.
        std::map<uint64_t, uint64_t> via;  // root -> smallest neighbor id
        for (uint64_t nb : core.nbrs) {
          for (uint64_t id : st[nb].list) {
            if (id == self) continue;
            if (std::binary_search(my_known->begin(), my_known->end(), id))
              continue;
            auto it = via.find(id);
            if (it == via.end() || nb < it->second) via[id] = nb;
          }
        }
        std::map<uint64_t, std::vector<uint64_t>> per_nbr;
        for (auto& [root, nb] : via) {
          per_nbr[nb].push_back(root);
          adopted.push_back({root, nb});
        }
        for (uint64_t nb : core.nbrs) {
          auto& roots = per_nbr[nb];
          Bits b = Bits::of_uint(roots.size(), count_w);
          for (uint64_t r : roots) b.append_uint(r, a);
          core.out_q[nb].push(b);
        }
        confirms_published = true;
      }
      core.drain(api, api_bandwidth);
    }
    int api_bandwidth = 0;
    bool lists_done() const {
      for (const auto& [nb, s] : st)
        if (s.phase < 2) return false;
      return true;
    }
  };

  auto run = run_sim<LearnProgram>(g, cfg, [&](int v, const LocalView& view) {
    LearnProgram p;
    p.my_known = &ov.known[v];
    p.a = a;
    p.count_w = count_w;
    p.api_bandwidth = view.bandwidth_bits;
    return p;
  });
  if (acc) acc->merge(run.report);
  if (!run.report.clean())
    throw OverlayInvariantError("learn_ids_one_hop aborted");

  SparseOverlay next;
  next.q = ov.q;
  next.radius = ov.radius + 1;
  next.maxdeg_below = ov.maxdeg_at;
  next.trees = ov.trees;
  next.known.assign(g.n, {});
  next.nbr_layers = ov.nbr_layers;

  // New knowledge layer: what each neighbor reported (their N^radius sets).
  std::vector<std::vector<std::vector<uint64_t>>> layer(g.n);
  for (int v = 0; v < g.n; ++v) {
    layer[v].resize(g.adj[v].size());
    auto& prog = run.programs[v];
    for (size_t j = 0; j < g.adj[v].size(); ++j) {
      uint64_t nb_id = g.ids[g.adj[v][j]];
      auto l = prog.st.at(nb_id).list;
      std::sort(l.begin(), l.end());
      layer[v][j] = std::move(l);
    }
    // Union of neighbor lists, minus self.
    std::set<uint64_t> u(ov.known[v].begin(), ov.known[v].end());
    for (auto& l : layer[v])
      for (uint64_t id : l)
        if (id != g.ids[v]) u.insert(id);
    next.known[v].assign(u.begin(), u.end());
  }
  next.nbr_layers.push_back(std::move(layer));

  // Tree extension from confirmations.
  std::map<uint64_t, size_t> root_pos;
  for (size_t qi = 0; qi < next.q.size(); ++qi)
    root_pos[g.ids[next.q[qi]]] = qi;
  for (int v = 0; v < g.n; ++v) {
    for (auto& [root, via_nb] : run.programs[v].adopted) {
      auto it = root_pos.find(root);
      if (it == root_pos.end())
        throw OverlayInvariantError("confirmed unknown root");
      BfsTree& t = next.trees[it->second];
      t.parent[v] = g.index_of_id(via_nb);
      t.hop[v] = next.radius;
      t.depth = next.radius;
    }
  }
  int at = 0;
  for (int v = 0; v < g.n; ++v)
    at = std::max(at, (int)next.known[v].size() + (next.in_q(v) ? 1 : 0));
  next.maxdeg_at = at;
  return next;
}


// Builds an overlay at the requested radius by iterating learn_ids_one_hop.
inline SparseOverlay build_overlay(const Graph& g, std::vector<int> q,
                                   int radius, const SimConfig& cfg,
                                   RoundReport* acc = nullptr) {
  SparseOverlay ov = overlay_radius1(g, std::move(q), cfg, acc);
  while (ov.radius < radius) ov = learn_ids_one_hop(g, ov, cfg, acc);
  return ov;
}

// Recomputes every piece of overlay knowledge with graph oracles and
// throws on the first mismatch. Used by tests and paranoid callers.
inline void verify_overlay(const Graph& g, const SparseOverlay& ov) {
  std::vector<char> in_q(g.n, 0);
  for (int v : ov.q) in_q[v] = 1;
  for (int v = 0; v < g.n; ++v) {
    auto dist = bfs_distances(g, v, ov.radius);
    std::vector<uint64_t> expect;
    for (int w = 0; w < g.n; ++w)
      if (w != v && in_q[w] && dist[w] <= ov.radius)
        expect.push_back(g.ids[w]);
    std::sort(expect.begin(), expect.end());
    if (expect != ov.known[v])
      throw OverlayInvariantError("overlay knowledge mismatch");
  }
  for (size_t qi = 0; qi < ov.q.size(); ++qi) {
    const BfsTree& t = ov.trees[qi];
    auto dist = bfs_distances(g, ov.q[qi], ov.radius);
    for (int v = 0; v < g.n; ++v) {
      bool should = dist[v] <= ov.radius;
      if (should != t.is_member(v))
        throw OverlayInvariantError("tree member mismatch");
      if (!should || v == ov.q[qi]) continue;
      if (t.hop[v] != dist[v])
        throw OverlayInvariantError("tree depth mismatch");
      if (t.parent[v] < 0 || !g.has_edge(v, t.parent[v]) ||
          t.hop[t.parent[v]] != dist[v] - 1)
        throw OverlayInvariantError("tree parent mismatch");
    }
  }
  int at = 0, below = 0;
  for (int v = 0; v < g.n; ++v) {
    auto dist = bfs_distances(g, v, ov.radius);
    int da = in_q[v] ? 1 : 0, db = in_q[v] ? 1 : 0;
    for (int w = 0; w < g.n; ++w) {
      if (w == v || !in_q[w]) continue;
      if (dist[w] <= ov.radius) ++da;
      if (dist[w] <= ov.radius - 1) ++db;
    }
    at = std::max(at, da);
    below = std::max(below, db);
  }
  if (at > ov.maxdeg_at || below > ov.maxdeg_below)
    throw OverlayInvariantError("overlay degree certification too small");
}

// ---------------------------------------------------------------------------
// Broadcast from Q down the overlay trees (piece pipelining).

struct BroadcastResult {
  // received[v]: root id -> m-bit message
  std::vector<std::map<uint64_t, Bits>> received;
  RoundReport report;
  // distinct broadcast sources whose pieces crossed each undirected edge
  std::map<std::pair<int, int>, std::set<uint64_t>> roots_on_edge;
  bool degraded = false;  // piece size was clamped up to 1 bit
};

inline BroadcastResult broadcast_from_q(
    const Graph& g, const SparseOverlay& ov,
    const std::map<int, Bits>& messages,  // q vertex -> message
    int m, const SimConfig& cfg) {
  const int bw = cfg.resolve_bandwidth(g);
  if (bw < ov.maxdeg_below)
    throw std::invalid_argument("broadcast: bandwidth < maxdeg");
  for (auto& [x, msg] : messages) {
    if (!ov.in_q(x)) throw std::invalid_argument("broadcast: sender not in Q");
    if (msg.size() > m) throw std::invalid_argument("broadcast: message too long");
  }
  int b_prime = std::max(1, bw / (2 * std::max(1, ov.maxdeg_below)));
  b_prime = std::min(b_prime, std::max(1, m));
  const int pieces = std::max(1, (m + b_prime - 1) / b_prime);
  const int idx_w = std::max(1, ceil_log2(pieces));
  const int a = g.id_bits;
  const int rec_w = a + idx_w + b_prime;

  struct Piece {
    uint64_t root;
    int idx;
    Bits payload;
  };
  struct BcastProgram {
    comm_detail::StreamCore core;
    const std::vector<comm_detail::TreeLocalInfo>* trees;
    std::map<uint64_t, std::vector<Bits>> got;  // root -> piece payloads
    std::map<uint64_t, int> got_count;
    std::vector<std::pair<uint64_t, uint64_t>> sent_log;  // (to, root)
    Bits own_msg;
    bool has_own = false;
    bool seeded = false;
    int a, idx_w, b_prime, pieces, rec_w, bw;

    void init(const LocalView& v) { core.init_streams(v); }
    bool halted() const { return seeded && core.queues_empty(); }

    const comm_detail::TreeLocalInfo* tree_of(uint64_t root) const {
      for (const auto& t : *trees)
        if (t.root_id == root) return &t;
      return nullptr;
    }

    void enqueue_piece(uint64_t child, const Piece& p) {
      Bits rec;
      rec.append_uint(p.root, a);
      rec.append_uint((uint64_t)p.idx, idx_w);
      Bits pad = p.payload;
      while (pad.size() < b_prime) pad.append_bit(false);
      rec.append(pad);
      core.out_q[child].push(rec);
      sent_log.push_back({child, p.root});
    }

    void on_round(RoundApi& api) {
      core.absorb(api);
      if (!seeded) {
        if (has_own) {
          const auto* t = tree_of(self_root());
          if (t)
            for (int i = 0; i < pieces; ++i) {
              Piece p{t->root_id, i,
                      own_msg.slice(i * b_prime,
                                    std::min(b_prime, own_msg.size() - i * b_prime))};
              for (uint64_t child : t->children) enqueue_piece(child, p);
            }
        }
        seeded = true;
      }
      for (uint64_t nb : core.nbrs) {
        auto& q = core.in_q[nb];
        while (q.size() >= rec_w) {
          Bits rec = q.take(rec_w);
          Piece p;
          p.root = rec.read_uint(0, a);
          p.idx = (int)rec.read_uint(a, idx_w);
          p.payload = rec.slice(a + idx_w, b_prime);
          const auto* t = tree_of(p.root);
          if (!t || t->depth == 0 || t->parent_id != nb) continue;
          auto& store = got[p.root];
          if (store.empty()) store.resize(pieces);
          if (store[p.idx].size() == 0) {
            store[p.idx] = p.payload;
            got_count[p.root]++;
            for (uint64_t child : t->children) enqueue_piece(child, p);
          }
        }
      }
      core.drain(api, bw);
    }
    uint64_t self_root() const {
      for (const auto& t : *trees)
        if (t.depth == 0) return t.root_id;
      return 0;
    }
  };

  auto locals = comm_detail::tree_locals(g, ov);
  BroadcastResult result;
  auto run = run_sim<BcastProgram>(g, cfg, [&](int v, const LocalView& view) {
    BcastProgram p;
    p.trees = &locals[v];
    p.a = a;
    p.idx_w = idx_w;
    p.b_prime = b_prime;
    p.pieces = pieces;
    p.rec_w = rec_w;
    p.bw = view.bandwidth_bits;
    auto it = messages.find(v);
    if (it != messages.end()) {
      p.has_own = true;
      p.own_msg = it->second;
      while (p.own_msg.size() < m) p.own_msg.append_bit(false);
    }
    return p;
  });
  result.report = run.report;
  result.degraded = bw < 2 * ov.maxdeg_below;
  result.received.resize(g.n);
  for (int v = 0; v < g.n; ++v) {
    for (auto& [root, store] : run.programs[v].got) {
      if (run.programs[v].got_count[root] < pieces) continue;
      Bits full;
      for (const auto& piece : store) full.append(piece);
      result.received[v][root] = full.slice(0, m);
    }
    for (auto& [to_id, root] : run.programs[v].sent_log) {
      int w = g.index_of_id(to_id);
      result.roots_on_edge[{std::min(v, w), std::max(v, w)}].insert(root);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Q-message: (sender, addressee, payload) tuples routed down the sender's
// tree, pruned by the receivers' reported Q-neighborhoods.

struct QMessageResult {
  // inbox[x (vertex)]: sorted by sender id
  std::map<int, std::vector<std::pair<uint64_t, Bits>>> inbox;
  RoundReport report;
  // distinct (sender, addressee) tuples that crossed each directed edge
  std::map<std::pair<int, int>, std::set<std::pair<uint64_t, uint64_t>>>
      tuples_on_edge;
  bool degraded = false;
};

class InvalidDestinationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline QMessageResult q_message(
    const Graph& g, const SparseOverlay& ov,
    const std::map<int, std::vector<std::pair<uint64_t, Bits>>>& outboxes,
    int m_max, const SimConfig& cfg) {
  const int bw = cfg.resolve_bandwidth(g);
  if (bw < ov.maxdeg_below)
    throw std::invalid_argument("q_message: bandwidth < maxdeg");
  const int s = ov.radius;
  const int a = g.id_bits;
  const int len_w = ceil_log2(m_max + 2);
  const int rec_w = 2 * a + len_w + m_max;

  for (auto& [x, msgs] : outboxes) {
    if (!ov.in_q(x)) throw std::invalid_argument("q_message: sender not in Q");
    for (auto& [y, msg] : msgs) {
      if (msg.size() > m_max)
        throw std::invalid_argument("q_message: message too long");
      if (!std::binary_search(ov.known[x].begin(), ov.known[x].end(), y))
        throw InvalidDestinationError("q_message: addressee outside N^s(x,Q)");
    }
  }

  struct Tuple {
    uint64_t root, addressee;
    Bits payload;  // len-prefixed content, padded to m_max
  };
  struct QmsgProgram {
    comm_detail::StreamCore core;
    const std::vector<comm_detail::TreeLocalInfo>* trees;
    const SparseOverlay* ov;
    const Graph* g;
    int vertex;
    int a, len_w, m_max, rec_w, s, bw;
    std::vector<Tuple> initial;  // own outbox (root == self)
    bool seeded = false;
    std::vector<std::pair<uint64_t, Bits>> delivered;
    std::vector<std::tuple<uint64_t, uint64_t, uint64_t>> sent_log;

    void init(const LocalView& v) { core.init_streams(v); }
    bool halted() const { return seeded && core.queues_empty(); }

    const comm_detail::TreeLocalInfo* tree_of(uint64_t root) const {
      for (const auto& t : *trees)
        if (t.root_id == root) return &t;
      return nullptr;
    }

    // Forward tuple for tree t to child w iff the addressee is w itself or
    // is within the remaining tree depth of w according to w's reported set.
    bool should_forward(const comm_detail::TreeLocalInfo& t, uint64_t child,
                        uint64_t addressee) const {
      if (child == addressee) return true;
      int remaining = s - t.depth - 1;
      if (remaining <= 0) return false;
      int adj_pos = -1;
      for (size_t j = 0; j < g->adj[vertex].size(); ++j)
        if (g->ids[g->adj[vertex][j]] == child) {
          adj_pos = (int)j;
          break;
        }
      const auto& known = ov->neighbor_known(remaining, vertex, adj_pos);
      return std::binary_search(known.begin(), known.end(), addressee);
    }

    void route(const Tuple& tp, const comm_detail::TreeLocalInfo& t) {
      for (uint64_t child : t.children) {
        if (!should_forward(t, child, tp.addressee)) continue;
        Bits rec;
        rec.append_uint(tp.root, a);
        rec.append_uint(tp.addressee, a);
        rec.append(tp.payload);
        core.out_q[child].push(rec);
        sent_log.push_back({child, tp.root, tp.addressee});
      }
    }

    void on_round(RoundApi& api) {
      core.absorb(api);
      if (!seeded) {
        const auto* t = tree_of(g->ids[vertex]);
        if (t)
          for (const auto& tp : initial) route(tp, *t);
        seeded = true;
      }
      for (uint64_t nb : core.nbrs) {
        auto& q = core.in_q[nb];
        while (q.size() >= rec_w) {
          Bits rec = q.take(rec_w);
          Tuple tp;
          tp.root = rec.read_uint(0, a);
          tp.addressee = rec.read_uint(a, a);
          tp.payload = rec.slice(2 * a, len_w + m_max);
          const auto* t = tree_of(tp.root);
          if (!t || t->depth == 0 || t->parent_id != nb) continue;
          if (tp.addressee == g->ids[vertex]) {
            int len = (int)tp.payload.read_uint(0, len_w);
            delivered.push_back({tp.root, tp.payload.slice(len_w, len)});
          } else {
            route(tp, *t);
          }
        }
      }
      core.drain(api, bw);
    }
  };

  auto locals = comm_detail::tree_locals(g, ov);
  QMessageResult result;
  auto run = run_sim<QmsgProgram>(g, cfg, [&](int v, const LocalView& view) {
    QmsgProgram p;
    p.trees = &locals[v];
    p.ov = &ov;
    p.g = &g;
    p.vertex = v;
    p.a = a;
    p.len_w = len_w;
    p.m_max = m_max;
    p.rec_w = rec_w;
    p.s = s;
    p.bw = view.bandwidth_bits;
    auto it = outboxes.find(v);
    if (it != outboxes.end())
      for (auto& [y, msg] : it->second) {
        Tuple tp;
        tp.root = g.ids[v];
        tp.addressee = y;
        tp.payload.append_uint(msg.size(), len_w);
        tp.payload.append(msg);
        while (tp.payload.size() < len_w + m_max) tp.payload.append_bit(false);
        p.initial.push_back(tp);
      }
    return p;
  });
  result.report = run.report;
  result.degraded = bw < 2 * ov.maxdeg_below;
  for (int v = 0; v < g.n; ++v) {
    auto& d = run.programs[v].delivered;
    if (!d.empty()) {
      std::sort(d.begin(), d.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      result.inbox[v] = d;
    }
    for (auto& [to_id, root, addr] : run.programs[v].sent_log)
      result.tuples_on_edge[{v, g.index_of_id(to_id)}].insert({root, addr});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Convergecast of a sum along a spanning BFS tree.

struct ConvergecastResult {
  uint64_t sum = 0;
  RoundReport report;
};

inline ConvergecastResult convergecast_sum(const Graph& g, const BfsTree& tree,
                                           const std::vector<uint64_t>& values,
                                           int m, const SimConfig& cfg) {
  const int sum_w = m + ceil_log2(std::max(2, g.n) + 1);
  if (sum_w > 62) throw std::invalid_argument("convergecast: sum too wide");
  for (int v = 0; v < g.n; ++v)
    if (!tree.is_member(v))
      throw std::invalid_argument("convergecast: tree is not spanning");

  struct CastProgram {
    comm_detail::StreamCore core;
    uint64_t parent_id = 0;
    bool is_root = false;
    int expect_children = 0;
    int got_children = 0;
    uint64_t acc = 0;
    bool pushed = false;
    int sum_w = 0, bw = 0;

    void init(const LocalView& v) { core.init_streams(v); }
    bool halted() const {
      if (is_root) return got_children >= expect_children;
      return pushed && core.queues_empty();
    }
    void on_round(RoundApi& api) {
      core.absorb(api);
      for (uint64_t nb : core.nbrs) {
        auto& q = core.in_q[nb];
        while (q.size() >= sum_w) {
          acc += q.take(sum_w).read_uint(0, sum_w);
          ++got_children;
        }
      }
      if (!is_root && !pushed && got_children >= expect_children) {
        core.out_q[parent_id].push(Bits::of_uint(acc, sum_w));
        pushed = true;
      }
      core.drain(api, bw);
    }
  };

  auto children = tree.children();
  auto run = run_sim<CastProgram>(g, cfg, [&](int v, const LocalView& view) {
    CastProgram p;
    p.sum_w = sum_w;
    p.bw = view.bandwidth_bits;
    p.acc = values[v];
    p.expect_children = (int)children[v].size();
    p.is_root = tree.parent[v] == -1;
    if (!p.is_root) p.parent_id = g.ids[tree.parent[v]];
    return p;
  });
  ConvergecastResult out;
  out.report = run.report;
  out.sum = run.programs[tree.root].acc;
  return out;
}

// ---------------------------------------------------------------------------
// Black-box simulation of a node program on G^s[Q] with communication
// network G. Each inner round is realized by one q_message exchange.

template <class P>
struct SimulateResult {
  std::vector<P> programs;     // aligned with overlay.q
  std::vector<int> q;          // vertex indices
  RoundReport inner_report;    // rounds/bits of the virtual execution
  RoundReport outer_report;    // cost in the real network
};

template <class P, class Factory>
SimulateResult<P> simulate_on_power_subgraph(const Graph& g,
                                             const SparseOverlay& ov,
                                             const SimConfig& inner_cfg,
                                             const SimConfig& outer_cfg,
                                             Factory&& make) {
  SimulateResult<P> result;
  result.q = ov.q;
  const int nq = (int)ov.q.size();
  const int inner_bw = inner_cfg.resolve_bandwidth(g);

  std::vector<LocalView> views(nq);
  for (int i = 0; i < nq; ++i) {
    int v = ov.q[i];
    LocalView& lv = views[i];
    lv.vertex = v;
    lv.id = g.ids[v];
    lv.neighbor_ids = ov.known[v];
    lv.n = g.n;
    lv.max_degree = std::min(g.n - 1, g.max_degree() * ov.maxdeg_below);
    lv.id_bits = g.id_bits;
    lv.bandwidth_bits = inner_bw;
  }
  result.programs.reserve(nq);
  for (int i = 0; i < nq; ++i) result.programs.push_back(make(i, views[i]));
  for (int i = 0; i < nq; ++i) result.programs[i].init(views[i]);

  std::vector<std::vector<Incoming>> inbox(nq);
  bool in_flight = false;
  for (int round = 1;; ++round) {
    bool all_halted = true;
    for (int i = 0; i < nq; ++i)
      if (!result.programs[i].halted()) {
        all_halted = false;
        break;
      }
    if (all_halted && !in_flight) break;
    if (round > inner_cfg.round_limit) {
      result.inner_report.timed_out = true;
      break;
    }
    result.inner_report.rounds_used = round;

    std::map<int, std::vector<std::pair<uint64_t, Bits>>> outboxes;
    std::map<std::pair<int, uint64_t>, int> pair_bits;
    bool aborted = false;
    for (int i = 0; i < nq && !aborted; ++i) {
      P& prog = result.programs[i];
      if (prog.halted() && inbox[i].empty()) continue;
      CounterRng rng(inner_cfg.rng_seed, views[i].id, (uint64_t)round);
      RoundApi api(round, &inbox[i], &rng);
      prog.on_round(api);
      for (auto& [to_id, payload] : api.take_out()) {
        if (!std::binary_search(views[i].neighbor_ids.begin(),
                                views[i].neighbor_ids.end(), to_id))
          throw InvalidDestinationError("inner send outside G^s[Q]");
        int& used = pair_bits[{i, to_id}];
        used += payload.size();
        result.inner_report.total_bits += payload.size();
        result.inner_report.max_bits_on_edge =
            std::max(result.inner_report.max_bits_on_edge, used);
        if (used > inner_bw) {
          result.inner_report.violations.push_back(
              {round, ov.q[i], (int)g.index_of_id(to_id), used, inner_bw});
          aborted = true;
          break;
        }
        outboxes[ov.q[i]].push_back({to_id, std::move(payload)});
      }
    }
    if (aborted) break;

    for (auto& b : inbox) b.clear();
    in_flight = false;
    if (!outboxes.empty()) {
      auto qr = q_message(g, ov, outboxes, inner_bw, outer_cfg);
      result.outer_report.merge(qr.report);
      if (!qr.report.clean())
        throw OverlayInvariantError("simulation transport failed");
      for (auto& [v, msgs] : qr.inbox) {
        int i = (int)(std::lower_bound(ov.q.begin(), ov.q.end(), v) -
                      ov.q.begin());
        for (auto& [sender, payload] : msgs) inbox[i].push_back({sender, payload});
        in_flight = true;
      }
    }
  }
  return result;
}


// ---------------------------------------------------------------------------
// One derandomization step: convergecast two per-node numerators up a
// spanning tree, let the root pick the smaller total (ties toward 0), and
// flood the decision back down.

struct BitDecisionOutcome {
  uint64_t sum0 = 0, sum1 = 0;
  int bit = 0;
  RoundReport report;
};

inline BitDecisionOutcome aggregate_and_decide(
    const Graph& g, const BfsTree& tree, const std::vector<uint64_t>& alpha0,
    const std::vector<uint64_t>& alpha1, int value_w, const SimConfig& cfg) {
  if (value_w > 62) throw std::invalid_argument("aggregate: values too wide");

  struct Prog {
    comm_detail::StreamCore core;
    uint64_t parent_id = 0;
    bool is_root = false;
    int expect_children = 0, got_children = 0;
    uint64_t acc0 = 0, acc1 = 0;
    bool pushed = false;
    int decision = -1;
    bool decision_sent = false;
    std::vector<uint64_t> child_ids;
    int w = 0, bw = 0;

    void init(const LocalView& v) { core.init_streams(v); }
    bool halted() const {
      return decision >= 0 && (decision_sent || child_ids.empty()) &&
             core.queues_empty();
    }
    void on_round(RoundApi& api) {
      core.absorb(api);
      for (uint64_t nb : core.nbrs) {
        auto& q = core.in_q[nb];
        if (nb == parent_id && !is_root) {
          if (decision < 0 && q.size() >= 1)
            decision = (int)q.take(1).read_uint(0, 1);
        } else {
          while (q.size() >= 2 * w) {
            Bits rec = q.take(2 * w);
            acc0 += rec.read_uint(0, w);
            acc1 += rec.read_uint(w, w);
            ++got_children;
          }
        }
      }
      if (!pushed && got_children >= expect_children) {
        if (is_root) {
          decision = acc1 < acc0 ? 1 : 0;
        } else {
          Bits rec;
          rec.append_uint(acc0, w);
          rec.append_uint(acc1, w);
          core.out_q[parent_id].push(rec);
        }
        pushed = true;
      }
      if (decision >= 0 && !decision_sent) {
        for (uint64_t c : child_ids)
          core.out_q[c].push(Bits::of_uint((uint64_t)decision, 1));
        decision_sent = true;
      }
      core.drain(api, bw);
    }
  };

  auto children = tree.children();
  auto run = run_sim<Prog>(g, cfg, [&](int v, const LocalView& view) {
    Prog p;
    p.w = value_w;
    p.bw = view.bandwidth_bits;
    p.acc0 = alpha0[v];
    p.acc1 = alpha1[v];
    p.expect_children = (int)children[v].size();
    for (int c : children[v]) p.child_ids.push_back(g.ids[c]);
    p.is_root = tree.parent[v] == -1;
    if (!p.is_root) p.parent_id = g.ids[tree.parent[v]];
    return p;
  });
  BitDecisionOutcome out;
  out.report = run.report;
  out.sum0 = run.programs[tree.root].acc0;
  out.sum1 = run.programs[tree.root].acc1;
  out.bit = run.programs[tree.root].decision;
  for (int v = 0; v < g.n; ++v)
    if (run.programs[v].decision != out.bit)
      throw std::logic_error("bit decision did not reach every node");
  return out;
}

}  // namespace psim
