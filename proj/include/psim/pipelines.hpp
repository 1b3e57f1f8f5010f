#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include "psim/mis.hpp"
#include "psim/netdecomp.hpp"
#include "psim/ruling.hpp"
#include "psim/sparsify.hpp"

namespace psim {

struct MisGkParams {
  int c_pre = 8;
  int s_conn = 8;
  int c_post = 8;
  int b_digits = 2;
  int max_color_retries = 10;
  int instances_override = 0;  // 0 = derive Theta(log_N n)
  bool check_oracles = true;
};

namespace pipeline_detail {

// BFS tree from the smallest-ID member spanning a set of members; paths
// may pass through non-members (weak-diameter cluster trees).
struct ClusterTree {
  int root = -1;
  std::vector<int> parent;  // -2 non-member of tree, -1 root
  std::vector<std::vector<int>> children;
  int depth = 0;
};

inline ClusterTree build_cluster_tree(const Graph& g,
                                      const std::vector<int>& members) {
  ClusterTree t;
  t.parent.assign(g.n, -2);
  t.children.resize(g.n);
  if (members.empty()) return t;
  t.root = members[0];
  for (int v : members)
    if (g.ids[v] < g.ids[t.root]) t.root = v;
  BfsTree bfs = bfs_tree(g, t.root, g.n);
  std::vector<char> keep(g.n, 0);
  for (int v : members) {
    if (!bfs.is_member(v))
      throw std::logic_error("cluster tree: member unreachable");
    for (int u = v; u != -1 && !keep[u]; u = bfs.parent[u]) keep[u] = 1;
  }
  for (int v = 0; v < g.n; ++v) {
    if (!keep[v]) continue;
    t.parent[v] = bfs.parent[v];
    if (bfs.parent[v] >= 0) t.children[bfs.parent[v]].push_back(v);
    t.depth = std::max(t.depth, bfs.hop[v]);
  }
  return t;
}

// Convergecast an L-bit failure mask up the cluster tree; the root picks
// the smallest clean instance (or L for "none") and floods it back down.
struct ClusterVoteProgram {
  comm_detail::StreamCore core;
  bool in_tree = false, is_root = false;
  uint64_t parent_id = 0;
  std::vector<uint64_t> child_ids;
  int expect = 0, got = 0;
  uint64_t mask = 0;  // bit i set: instance i failed somewhere below
  int L = 1, choice_w = 1;
  int choice = -1;
  bool pushed = false, choice_sent = false;
  int bw = 0;

  void init(const LocalView& v) {
    core.init_streams(v);
    bw = v.bandwidth_bits;
  }
  bool halted() const {
    if (!in_tree) return true;
    return choice >= 0 && (choice_sent || child_ids.empty()) &&
           core.queues_empty();
  }
  void on_round(RoundApi& api) {
    if (!in_tree) return;
    core.absorb(api);
    for (uint64_t nb : core.nbrs) {
      auto& q = core.in_q[nb];
      if (!is_root && nb == parent_id) {
        if (choice < 0 && q.size() >= choice_w)
          choice = (int)q.take(choice_w).read_uint(0, choice_w);
      } else {
        while (q.size() >= L) {
          mask |= q.take(L).read_uint(0, L);
          ++got;
        }
      }
    }
    if (!pushed && got >= expect) {
      if (is_root) {
        choice = L;  // none
        for (int i = 0; i < L; ++i)
          if (!((mask >> i) & 1)) {
            choice = i;
            break;
          }
      } else {
        core.out_q[parent_id].push(Bits::of_uint(mask, L));
      }
      pushed = true;
    }
    if (choice >= 0 && !choice_sent) {
      for (uint64_t c : child_ids)
        core.out_q[c].push(Bits::of_uint((uint64_t)choice, choice_w));
      choice_sent = true;
    }
    core.drain(api, bw);
  }
};

// BeepingMIS instances multiplexed into one message: per instance two
// ID-tagged tuple slots plus a joined-flood bit, compact IDs.
struct ParallelBeepingProgram {
  LocalView view;
  int k = 1, L = 1, idw = 1, hopw = 1, steps_cap = 1;
  int step_len = 4;
  bool member = false;
  uint64_t compact_id = 0;
  std::vector<int> status;     // per instance
  std::vector<double> p_mark;
  std::vector<char> marked, heard, join_sent, heard_join;
  std::vector<std::map<uint64_t, int>> pool;
  int steps_done = 0;

  explicit ParallelBeepingProgram(const LocalView& v) : view(v) {}
  void init(const LocalView&) {
    step_len = 2 * k + 2;
    status.assign(L, member ? 0 : 2);
    p_mark.assign(L, 0.5);
    marked.assign(L, 0);
    heard.assign(L, 0);
    join_sent.assign(L, 0);
    heard_join.assign(L, 0);
    pool.assign(L, {});
  }
  bool halted() const {
    if (steps_done >= steps_cap) return true;
    if (!member) return true;  // woken as a relay
    for (int i = 0; i < L; ++i)
      if (status[i] == 0) return false;
    return true;
  }

  int slot_bits() const { return 2 * (1 + idw + hopw) + 1; }

  int last_step = -1;
  void reset_step(int step) {
    if (step == last_step) return;
    last_step = step;
    for (int i = 0; i < L; ++i) {
      marked[i] = 0;
      heard[i] = 0;
      join_sent[i] = 0;
      heard_join[i] = 0;
      pool[i].clear();
    }
  }
  void on_round(RoundApi& api) {
    if (steps_done >= steps_cap) return;
    int r0 = (int)((api.round() - 1) % step_len);
    int sb = slot_bits();
    reset_step((int)((api.round() - 1) / step_len));
    Bits out;
    bool any_bits = false;

    if (r0 == 0) {
      for (int i = 0; i < L; ++i) {
        double coin = api.rng().uniform01();
        if (status[i] == 0 && coin < p_mark[i]) marked[i] = 1;
      }
      for (int i = 0; i < L; ++i) {
        Bits slot;
        if (marked[i]) {
          slot.append_bit(true);
          slot.append_uint(compact_id, idw);
          slot.append_uint((uint64_t)(k - 1), hopw);
          any_bits = true;
        } else {
          slot.append_uint(0, 1 + idw + hopw);
        }
        slot.append_uint(0, 1 + idw + hopw);  // second tuple empty
        slot.append_bit(false);               // join bit
        out.append(slot);
      }
      if (any_bits)
        for (uint64_t nb : view.neighbor_ids) api.send(nb, out);
      return;
    }

    // Parse all incoming multiplexed frames.
    std::vector<char> join_in(L, 0);
    for (const auto& m : api.inbox()) {
      if (m.payload.size() != sb * L) continue;
      for (int i = 0; i < L; ++i) {
        int base = i * sb;
        for (int t = 0; t < 2; ++t) {
          int o = base + t * (1 + idw + hopw);
          if (!m.payload.bit(o)) continue;
          uint64_t id = m.payload.read_uint(o + 1, idw);
          int hops = (int)m.payload.read_uint(o + 1 + idw, hopw);
          if (member && id != compact_id) heard[i] = 1;
          auto it = pool[i].find(id);
          if (it == pool[i].end() || it->second < hops) pool[i][id] = hops;
        }
        if (m.payload.bit(base + sb - 1)) join_in[i] = 1;
      }
    }

    if (r0 <= k) {
      if (r0 <= k - 1) {
        for (int i = 0; i < L; ++i) {
          Bits slot;
          int written = 0;
          for (auto& [id, hops] : pool[i]) {
            if (written == 2) break;
            if (hops >= 1) {
              slot.append_bit(true);
              slot.append_uint(id, idw);
              slot.append_uint((uint64_t)(hops - 1), hopw);
              ++written;
              any_bits = true;
            }
          }
          for (; written < 2; ++written) slot.append_uint(0, 1 + idw + hopw);
          slot.append_bit(false);
          out.append(slot);
          pool[i].clear();
        }
        if (any_bits)
          for (uint64_t nb : view.neighbor_ids) api.send(nb, out);
      }
      if (r0 == k && member) {
        Bits jout;
        bool send_join = false;
        for (int i = 0; i < L; ++i) {
          Bits slot;
          slot.append_uint(0, 2 * (1 + idw + hopw));
          bool j = false;
          if (status[i] == 0) {
            if (marked[i] && !heard[i]) {
              status[i] = 1;
              j = true;
              join_sent[i] = 1;
              send_join = true;
            }
            p_mark[i] =
                heard[i] ? p_mark[i] / 2 : std::min(0.5, 2 * p_mark[i]);
          }
          slot.append_bit(j);
          jout.append(slot);
        }
        if (send_join)
          for (uint64_t nb : view.neighbor_ids) api.send(nb, jout);
      }
      return;
    }

    // Joined-flood window; valid arrivals end at r0 == 2k.
    Bits jfwd;
    bool fwd = false;
    for (int i = 0; i < L; ++i) {
      Bits slot;
      slot.append_uint(0, 2 * (1 + idw + hopw));
      bool relay_join = false;
      if (join_in[i] && !heard_join[i] && r0 <= 2 * k) {
        heard_join[i] = 1;
        if (member && status[i] == 0) status[i] = 2;
        if (r0 <= 2 * k - 1 && !join_sent[i]) {
          relay_join = true;
          join_sent[i] = 1;
          fwd = true;
        }
      }
      slot.append_bit(relay_join);
      jfwd.append(slot);
    }
    if (fwd)
      for (uint64_t nb : view.neighbor_ids) api.send(nb, jfwd);
    if (r0 == 2 * k + 1) steps_done = last_step + 1;
  }
};

}  // namespace pipeline_detail

// ---------------------------------------------------------------------------
// Randomized MIS of G^k: beeping pre-shattering, Awerbuch-ball ruling set
// over the undecided nodes, distance-k ball graph, network decomposition
// of the ball graph, then per color a batch of parallel beeping instances
// whose winner is selected by an in-cluster convergecast.

inline MisResult mis_gk(const Graph& g, int k, const MisGkParams& params,
                        uint64_t seed, const SimConfig& cfg,
                        const std::vector<int>* allowed = nullptr) {
  if (k < 1) throw std::invalid_argument("mis_gk: k must be >= 1");
  MisResult out;
  std::vector<int> allow_v;
  if (allowed)
    allow_v = *allowed;
  else {
    allow_v.resize(g.n);
    std::iota(allow_v.begin(), allow_v.end(), 0);
  }
  std::sort(allow_v.begin(), allow_v.end());

  auto sh = preshatter(g, k, params.s_conn, params.c_pre,
                       counter_hash(seed, 0x9e1), cfg, &allow_v);
  out.report.merge(sh.report);
  out.pre_rounds = sh.report.rounds_used;
  std::vector<int> mis = sh.in_set;
  std::vector<char> decided(g.n, 1);
  for (int v : allow_v) decided[v] = 0;
  for (int v : sh.in_set) decided[v] = 1;
  {
    auto dist = nd_detail::multi_bfs(g, sh.in_set, k);
    for (int v = 0; v < g.n; ++v)
      if (dist[v] <= k) decided[v] = 1;
  }
  std::vector<int> b = sh.undecided;

  if (!b.empty()) {
    auto [rset, part] = ball_ruling_set(
        g, 5 * k + 1, b, coloring_from_ids(g), params.b_digits, cfg);
    out.report.merge(rset.rounds);
    out.ruling_rounds = rset.rounds.rounds_used;
    if (params.check_oracles && !check_ball_partition(g, part, b))
      throw std::logic_error("mis_gk: ball partition oracle failed");
    auto bg = build_distance_k_ballgraph(g, part, k, cfg);
    out.report.merge(bg.report);
    out.ballgraph_rounds = bg.report.rounds_used;
    if (params.check_oracles && !check_distance_k_ballgraph(g, bg, part, k))
      throw std::logic_error("mis_gk: ball graph property failed");

    std::vector<int> bg_domain(bg.graph.n);
    std::iota(bg_domain.begin(), bg_domain.end(), 0);
    auto nd = decompose(bg.graph, bg_domain, 2 * k + 1);
    out.report.nd_oracle_used = true;

    // Expand ball clusters to undecided-node clusters (Ball, not Ball+).
    std::vector<std::vector<int>> clusters(nd.size());
    for (int v : b) {
      int root = part.ball_owner[v];
      int node = (int)(std::find(bg.roots.begin(), bg.roots.end(), root) -
                       bg.roots.begin());
      clusters[nd.cluster_of[node]].push_back(v);
    }
    if (params.check_oracles) {
      // Same-color expanded clusters stay separated in G^k.
      for (int c1 = 0; c1 < nd.size(); ++c1)
        for (int c2 = c1 + 1; c2 < nd.size(); ++c2) {
          if (nd.color[c1] != nd.color[c2]) continue;
          if (clusters[c1].empty() || clusters[c2].empty()) continue;
          auto dist = nd_detail::multi_bfs(g, clusters[c1], k);
          for (int v : clusters[c2])
            if (dist[v] <= k)
              throw std::logic_error("mis_gk: expanded clusters too close");
        }
    }

    double dk = power_degree_bound(g, k);
    double t_bound = std::max(
        1.0, std::ceil(std::log2((double)std::max(2, g.n)) /
                       std::log2(std::max(2.0, dk))));
    double cap_n = t_bound * std::pow(dk, 4.0 * k);
    long long n_cap =
        (double)g.n < cap_n ? g.n : (long long)std::min<double>(cap_n, 1e18);

    for (int color = 0; color < nd.num_colors; ++color) {
      std::vector<int> pending;
      for (int ci = 0; ci < nd.size(); ++ci)
        if (nd.color[ci] == color) pending.push_back(ci);
      for (int attempt = 0; attempt <= params.max_color_retries; ++attempt) {
        std::vector<int> still_pending;
        RoundReport attempt_rep;
        for (int ci : pending) {
          std::vector<int> members;
          for (int v : clusters[ci])
            if (!decided[v]) members.push_back(v);
          if (members.empty()) continue;

          long long nn = std::max<long long>(n_cap, (long long)members.size());
          int idw = std::max(1, ceil_log2((uint64_t)nn));
          int hopw = std::max(1, ceil_log2((uint64_t)k + 1));
          int slot = 2 * (1 + idw + hopw) + 1;
          int bw = cfg.resolve_bandwidth(g);
          int L = params.instances_override
                      ? params.instances_override
                      : std::max<int>(
                            1, (int)(std::log2((double)std::max(2, g.n)) /
                                     std::log2((double)std::max(2ll, nn))));
          L = std::max(1, std::min(L, bw / slot));
          int steps = std::max(
              1, (int)std::ceil(params.c_post *
                                std::log2((double)std::max(2ll, nn + 1))));

          std::map<int, uint64_t> compact;
          for (size_t i = 0; i < members.size(); ++i)
            compact[members[i]] = (uint64_t)i;

          SimConfig run_cfg = cfg;
          run_cfg.rng_seed = counter_hash(seed, 0xbee, color, attempt);
          run_cfg.bandwidth_bits = std::max(bw, L * slot);
          auto run = run_sim<pipeline_detail::ParallelBeepingProgram>(
              g, run_cfg, [&](int v, const LocalView& view) {
                pipeline_detail::ParallelBeepingProgram p(view);
                p.k = k;
                p.L = L;
                p.idw = idw;
                p.hopw = hopw;
                p.steps_cap = steps;
                auto it = compact.find(v);
                if (it != compact.end()) {
                  p.member = true;
                  p.compact_id = it->second;
                }
                return p;
              });
          merge_parallel(attempt_rep, run.report);

          // Aggregate per-instance success over the cluster tree.
          auto tree = pipeline_detail::build_cluster_tree(g, members);
          uint64_t fail_mask = 0;
          for (int v : members)
            for (int i = 0; i < L; ++i)
              if (run.programs[v].status[i] == 0) fail_mask |= 1ull << i;
          auto vote = run_sim<pipeline_detail::ClusterVoteProgram>(
              g, cfg, [&](int v, const LocalView&) {
                pipeline_detail::ClusterVoteProgram p;
                p.L = L;
                p.choice_w = std::max(1, ceil_log2((uint64_t)L + 1));
                if (tree.parent[v] != -2) {
                  p.in_tree = true;
                  p.is_root = tree.parent[v] == -1;
                  if (!p.is_root) p.parent_id = g.ids[tree.parent[v]];
                  for (int c : tree.children[v])
                    p.child_ids.push_back(g.ids[c]);
                  p.expect = (int)tree.children[v].size();
                  uint64_t local = 0;
                  for (int i = 0; i < L; ++i)
                    if (compact.count(v) && run.programs[v].status[i] == 0)
                      local |= 1ull << i;
                  p.mask = local;
                }
                return p;
              });
          merge_parallel(attempt_rep, vote.report);
          int choice = vote.programs[tree.root].choice;
          if (choice >= L) {
            still_pending.push_back(ci);
            continue;
          }
          std::vector<int> joiners;
          for (int v : members)
            if (run.programs[v].status[choice] == 1) joiners.push_back(v);
          for (int v : joiners) {
            mis.push_back(v);
            decided[v] = 1;
          }
          auto flood = flood_reach(g, joiners, k, cfg);
          merge_parallel(attempt_rep, flood.report);
          for (int v : flood.reached) decided[v] = 1;
        }
        out.report.rounds_used += attempt_rep.rounds_used;
        out.post_rounds += attempt_rep.rounds_used;
        out.report.total_bits += attempt_rep.total_bits;
        out.report.max_bits_on_edge = std::max(out.report.max_bits_on_edge,
                                               attempt_rep.max_bits_on_edge);
        pending = still_pending;
        if (pending.empty()) break;
      }
      if (!pending.empty())
        throw std::runtime_error("mis_gk: cluster retries exhausted");
    }
  }

  std::sort(mis.begin(), mis.end());
  out.set = mis;
  if (params.check_oracles) {
    auto induced = induced_subgraph(power_graph(g, k), allow_v);
    std::vector<int> mapped;
    for (int v : mis)
      mapped.push_back((int)(std::lower_bound(induced.origin.begin(),
                                              induced.origin.end(), v) -
                             induced.origin.begin()));
    if (!check_mis(induced.graph, mapped))
      throw std::logic_error("mis_gk: final MIS oracle failed");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shattering MIS for G itself, both post-shattering approaches.

enum class ShatterApproach { two_phase, one_phase };

namespace pipeline_detail {

// Greedy color sweep: per color, per set of pending cluster members, run
// the deterministic local-minima MIS respecting global statuses.
inline void sweep_color(const Graph& g, const std::vector<int>& participants,
                        std::vector<int>& mis, std::vector<char>& decided,
                        std::vector<char>& in_mis, const SimConfig& cfg,
                        RoundReport& rep) {
  if (participants.empty()) return;
  std::vector<char> part_flag(g.n, 0);
  for (int v : participants) part_flag[v] = 1;
  auto run = run_sim<GreedyMisProgram>(
      g, cfg, [&](int v, const LocalView& view) {
        GreedyMisProgram p(view);
        p.participates = part_flag[v] != 0;
        if (!p.participates) p.preset = in_mis[v] ? 1 : 2;
        return p;
      });
  rep.merge(run.report);
  std::vector<int> joiners;
  for (int v : participants)
    if (run.programs[v].status == 1) joiners.push_back(v);
  for (int v : joiners) {
    mis.push_back(v);
    in_mis[v] = 1;
    decided[v] = 1;
  }
  auto flood = flood_reach(g, joiners, 1, cfg);
  rep.merge(flood.report);
  for (int v : flood.reached) decided[v] = 1;
}

}  // namespace pipeline_detail

inline MisResult mis_g_shattering(const Graph& g, ShatterApproach approach,
                                  uint64_t seed, const SimConfig& cfg,
                                  int c_pre = 8) {
  MisResult out;
  std::vector<char> decided(g.n, 0), in_mis(g.n, 0);
  std::vector<int> mis;

  auto absorb_outcome = [&](const ShatterOutcome& sh) {
    for (int v : sh.in_set) {
      mis.push_back(v);
      in_mis[v] = 1;
    }
    auto dist = nd_detail::multi_bfs(g, sh.in_set, 1);
    for (int v = 0; v < g.n; ++v)
      if (dist[v] <= 1) decided[v] = 1;
  };

  // Clusters of undecided nodes to finish deterministically, plus the
  // ball graph they came from.
  std::vector<std::vector<int>> sweep_clusters;
  std::vector<int> sweep_color_of;
  int sweep_colors = 0;

  if (approach == ShatterApproach::two_phase) {
    auto sh = preshatter(g, 1, 1, c_pre, counter_hash(seed, 1), cfg);
    out.report.merge(sh.report);
    absorb_outcome(sh);
    std::vector<int> b;
    for (int v = 0; v < g.n; ++v)
      if (!decided[v]) b.push_back(v);
    if (!b.empty()) {
      auto comps = connected_components(g, b);
      // Second pre-shattering phase on each component in parallel: one run
      // on the induced graph realizes all of them.
      auto sub = induced_subgraph(g, b);
      auto sh2 = preshatter(sub.graph, 1, 1, c_pre, counter_hash(seed, 2), cfg);
      merge_parallel(out.report, sh2.report);
      ShatterOutcome lifted;
      for (int v : sh2.in_set) lifted.in_set.push_back(sub.origin[v]);
      absorb_outcome(lifted);

      for (auto& comp : comps) {
        std::vector<int> bc;
        for (int v : comp)
          if (!decided[v]) bc.push_back(v);
        if (bc.empty()) continue;
        // Per-component ruling set w.r.t. distances inside the component.
        auto comp_sub = induced_subgraph(g, comp);
        std::vector<int> bc_sub;
        for (int v : bc)
          bc_sub.push_back((int)(std::lower_bound(comp_sub.origin.begin(),
                                                  comp_sub.origin.end(), v) -
                                 comp_sub.origin.begin()));
        auto rs = awerbuch_ruling_set(comp_sub.graph, 4,
                                      coloring_from_ids(comp_sub.graph), 2,
                                      cfg, &bc_sub, true);
        merge_parallel(out.report, rs.rounds);
        // Closest-ruler balls inside the component (first-arrival flood).
        auto claim = run_sim<mis_detail::ClaimProgram>(
            comp_sub.graph, cfg, [&](int v, const LocalView&) {
              mis_detail::ClaimProgram p;
              p.duration = comp_sub.graph.n;
              if (std::binary_search(rs.set.begin(), rs.set.end(), v)) {
                p.origin = true;
                p.own_root = comp_sub.graph.ids[v];
              }
              return p;
            });
        merge_parallel(out.report, claim.report);
        std::map<int, int> owner;  // bc member (component index) -> ruler
        for (int v : bc_sub) {
          const auto& p = claim.programs[v];
          if (p.origin)
            owner[v] = v;
          else if (p.adopted != ~0ull)
            owner[v] = comp_sub.graph.index_of_id(p.adopted);
          else
            throw std::logic_error("shattering: unassigned undecided node");
        }
        // Ball graph and its decomposition.
        std::vector<int> rulers = rs.set;
        std::map<int, int> node_of;
        for (size_t i = 0; i < rulers.size(); ++i)
          node_of[rulers[i]] = (int)i;
        Graph ballg;
        ballg.n = (int)rulers.size();
        ballg.adj.assign(ballg.n, {});
        ballg.ids.resize(ballg.n);
        for (size_t i = 0; i < rulers.size(); ++i)
          ballg.ids[i] = comp_sub.graph.ids[rulers[i]];
        ballg.id_bits = comp_sub.graph.id_bits;
        std::set<std::pair<int, int>> bedges;
        for (int u : bc_sub)
          for (int w : comp_sub.graph.adj[u]) {
            if (!owner.count(u) || !owner.count(w)) continue;
            int a = node_of[owner[u]], bnode = node_of[owner[w]];
            if (a != bnode)
              bedges.insert({std::min(a, bnode), std::max(a, bnode)});
          }
        for (auto [a, bnode] : bedges) {
          ballg.adj[a].push_back(bnode);
          ballg.adj[bnode].push_back(a);
        }
        for (auto& adj : ballg.adj) std::sort(adj.begin(), adj.end());
        ballg.rebuild_id_index();
        std::vector<int> bdom(ballg.n);
        std::iota(bdom.begin(), bdom.end(), 0);
        auto nd = decompose(ballg, bdom, 2);
        out.report.nd_oracle_used = true;
        for (int ci = 0; ci < nd.size(); ++ci) {
          std::vector<int> cluster;
          for (auto& [v, r] : owner)
            if (nd.cluster_of[node_of[r]] == ci)
              cluster.push_back(comp_sub.origin[v]);
          sweep_clusters.push_back(cluster);
          sweep_color_of.push_back(nd.color[ci]);
          sweep_colors = std::max(sweep_colors, nd.color[ci] + 1);
        }
      }
    }
  } else {
    auto sh = preshatter(g, 1, 8, c_pre, counter_hash(seed, 1), cfg);
    out.report.merge(sh.report);
    absorb_outcome(sh);
    std::vector<int> b;
    for (int v = 0; v < g.n; ++v)
      if (!decided[v]) b.push_back(v);
    if (!b.empty()) {
      auto [rs, part] =
          ball_ruling_set(g, 5, b, coloring_from_ids(g), 2, cfg);
      out.report.merge(rs.rounds);
      if (!check_ball_partition(g, part, b))
        throw std::logic_error("shattering: ball partition oracle failed");
      auto bg = build_distance_k_ballgraph(g, part, 1, cfg);
      out.report.merge(bg.report);
      std::vector<int> bdom(bg.graph.n);
      std::iota(bdom.begin(), bdom.end(), 0);
      auto nd = decompose(bg.graph, bdom, 2);
      out.report.nd_oracle_used = true;
      std::map<int, int> node_of;
      for (size_t i = 0; i < bg.roots.size(); ++i) node_of[bg.roots[i]] = (int)i;
      for (int ci = 0; ci < nd.size(); ++ci) {
        std::vector<int> cluster;
        for (int v : b)
          if (nd.cluster_of[node_of[part.ball_owner[v]]] == ci)
            cluster.push_back(v);
        sweep_clusters.push_back(cluster);
        sweep_color_of.push_back(nd.color[ci]);
        sweep_colors = std::max(sweep_colors, nd.color[ci] + 1);
      }
    }
  }

  for (int color = 0; color < sweep_colors; ++color) {
    std::vector<int> participants;
    for (size_t ci = 0; ci < sweep_clusters.size(); ++ci)
      if (sweep_color_of[ci] == color)
        for (int v : sweep_clusters[ci])
          if (!decided[v]) participants.push_back(v);
    RoundReport rep;
    pipeline_detail::sweep_color(g, participants, mis, decided, in_mis, cfg,
                                 rep);
    out.report.rounds_used += rep.rounds_used;
    out.report.total_bits += rep.total_bits;
    out.report.max_bits_on_edge =
        std::max(out.report.max_bits_on_edge, rep.max_bits_on_edge);
  }

  std::sort(mis.begin(), mis.end());
  out.set = mis;
  if (!check_mis(g, out.set))
    throw std::logic_error("mis_g_shattering: MIS oracle failed");
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic (k+1, k^2)-ruling set of G (k-ruling set of G^k).

inline RulingSetResult k_ruling_set_of_gk(const Graph& g, int k,
                                          const SparsifyParams& params,
                                          const SimConfig& cfg) {
  if (k < 1) throw std::invalid_argument("k_ruling_set_of_gk: k >= 1");
  if (k == 1) {
    RulingSetResult res;
    res.alpha = 2;
    res.beta = 1;
    auto run = run_sim<GreedyMisProgram>(
        g, cfg, [](int, const LocalView& v) { return GreedyMisProgram(v); });
    res.rounds.merge(run.report);
    for (int v = 0; v < g.n; ++v)
      if (run.programs[v].status == 1) res.set.push_back(v);
    if (!check_mis(g, res.set))
      throw std::logic_error("k_ruling_set_of_gk: MIS oracle failed");
    return res;
  }
  std::vector<int> everyone(g.n);
  std::iota(everyone.begin(), everyone.end(), 0);
  auto nd = decompose(g, everyone, 2 * (k - 1) + 1);
  auto spars = sparsify_with_nd(g, k - 1, everyone, params, nd, cfg);
  RoundReport overlay_rep;
  auto ov = build_overlay(g, spars.q, k,
                          widen_for_overlay(cfg, g, 2 * params.cap(graph_log_n(g))),
                          &overlay_rep);
  auto res = ruling_via_sparsification(
      g, k, spars, ov, cfg,
      [](const Graph& gg, const SparseOverlay& o, const SimConfig& c) {
        return greedy_mis_on_power_subgraph(gg, o, c);
      });
  res.rounds.merge(overlay_rep);
  auto check = check_ruling_set(g, res.set, k + 1, k * k);
  if (!check.pass)
    throw std::logic_error("k_ruling_set_of_gk: ruling set oracle failed");
  return res;
}

// ---------------------------------------------------------------------------
// Randomized beta-ruling set of G^k via iterated KP12 sparsification.

inline RulingSetResult beta_ruling_set_gk(const Graph& g, int k, int beta,
                                          uint64_t seed, const SimConfig& cfg,
                                          const MisGkParams& mis_params = {}) {
  if (beta < 2) throw std::invalid_argument("beta_ruling_set_gk: beta >= 2");
  RulingSetResult res;
  res.alpha = k + 1;
  res.beta = beta * k;

  std::vector<int> active(g.n);
  std::iota(active.begin(), active.end(), 0);
  double ldk = std::log2(power_degree_bound(g, k));
  for (int s = 1; s <= beta - 1; ++s) {
    double expo = std::pow(ldk, 1.0 - (double)s / (beta - 1));
    double f = std::max(2.0, std::exp2(expo));
    auto step = kp12_sparsify_step(g, k, active, f, counter_hash(seed, s), cfg);
    res.rounds.merge(step.report);
    active = step.q;
  }
  auto mis = mis_gk(g, k, mis_params, counter_hash(seed, 0x315), cfg, &active);
  res.rounds.merge(mis.report);
  res.set = mis.set;
  return res;
}

}  // namespace psim
