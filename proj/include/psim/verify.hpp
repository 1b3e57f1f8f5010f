#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "psim/graph.hpp"

namespace psim {

// Brute-force oracles. Pure graph computations, independent of the
// simulator; everything here is fair game for acceptance checks.

struct RulingCheck {
  bool pass = false;
  bool independent = false;
  bool dominating = false;
  std::optional<std::pair<int, int>> independence_witness;  // too-close pair
  std::optional<int> domination_witness;                    // undominated vertex
};

inline RulingCheck check_ruling_set(const Graph& g, const std::vector<int>& s,
                                    int alpha, int beta,
                                    const std::vector<int>* domain = nullptr) {
  RulingCheck r;
  r.independent = true;
  r.dominating = true;
  std::vector<std::vector<int>> dist;
  for (int v : s) dist.push_back(bfs_distances(g, v));
  for (size_t i = 0; i < s.size() && r.independent; ++i)
    for (size_t j = i + 1; j < s.size(); ++j)
      if (dist[i][s[j]] < alpha) {
        r.independent = false;
        r.independence_witness = {s[i], s[j]};
        break;
      }
  std::vector<int> best(g.n, kUnreachable);
  for (auto& d : dist)
    for (int v = 0; v < g.n; ++v) best[v] = std::min(best[v], d[v]);
  auto check_dom = [&](int v) {
    if (best[v] > beta && r.dominating) {
      r.dominating = false;
      r.domination_witness = v;
    }
  };
  if (domain)
    for (int v : *domain) check_dom(v);
  else
    for (int v = 0; v < g.n; ++v) check_dom(v);
  r.pass = r.independent && r.dominating;
  return r;
}

inline bool check_mis(const Graph& g, const std::vector<int>& s) {
  return check_ruling_set(g, s, 2, 1).pass;
}

struct DegreeCapReport {
  bool pass = false;
  int max_degree = 0;
  int argmax = -1;
  int cap = 0;
};

// max over v of |N^k(v) ∩ Q| against cap.
inline DegreeCapReport check_degree_cap(const Graph& g,
                                        const std::vector<int>& q, int k,
                                        int cap) {
  DegreeCapReport r;
  r.cap = cap;
  std::vector<char> in_q(g.n, 0);
  for (int v : q) in_q[v] = 1;
  for (int v = 0; v < g.n; ++v) {
    auto dist = bfs_distances(g, v, k);
    int d = 0;
    for (int w = 0; w < g.n; ++w)
      if (w != v && in_q[w] && dist[w] <= k) ++d;
    if (d > r.max_degree) {
      r.max_degree = d;
      r.argmax = v;
    }
  }
  r.pass = r.max_degree <= cap;
  return r;
}

// S is k-connected iff G^k[S] is connected; empty and singleton sets count
// as connected.
inline bool is_k_connected(const Graph& g, const std::vector<int>& s, int k) {
  if (s.size() <= 1) return true;
  std::vector<char> in_s(g.n, 0);
  for (int v : s) in_s[v] = 1;
  std::vector<char> seen(g.n, 0);
  std::vector<int> stack{s[0]};
  seen[s[0]] = 1;
  size_t reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    auto dist = bfs_distances(g, u, k);
    for (int w = 0; w < g.n; ++w)
      if (in_s[w] && !seen[w] && dist[w] <= k) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
  }
  return reached == s.size();
}

struct FarSetResult {
  bool found = false;
  std::vector<int> witness;
  bool exhaustive = true;
};

// Searches b_set for an indep_dist-independent subset of size >= size_floor.
// Exhaustive up to `exhaustive_cap` candidates, stochastic beyond (flagged).
inline FarSetResult max_independent_far_set(const Graph& g,
                                            const std::vector<int>& b_set,
                                            int indep_dist, int size_floor,
                                            int exhaustive_cap = 24) {
  FarSetResult res;
  if (size_floor <= 0) {
    res.found = true;
    return res;
  }
  if (b_set.empty()) return res;
  int m = (int)b_set.size();
  std::vector<std::vector<char>> conflict(m, std::vector<char>(m, 0));
  for (int i = 0; i < m; ++i) {
    auto dist = bfs_distances(g, b_set[i], indep_dist - 1);
    for (int j = 0; j < m; ++j)
      if (i != j && dist[b_set[j]] < indep_dist) conflict[i][j] = 1;
  }
  std::vector<int> chosen;
  if (m <= exhaustive_cap) {
    // Branch and bound over candidate indices.
    std::vector<int> best;
    auto rec = [&](auto&& self, int idx) -> bool {
      if ((int)chosen.size() >= size_floor) return true;
      if (idx >= m || (int)chosen.size() + (m - idx) < size_floor) return false;
      bool ok = true;
      for (int c : chosen)
        if (conflict[c][idx]) {
          ok = false;
          break;
        }
      if (ok) {
        chosen.push_back(idx);
        if (self(self, idx + 1)) return true;
        chosen.pop_back();
      }
      return self(self, idx + 1);
    };
    res.found = rec(rec, 0);
  } else {
    res.exhaustive = false;
    // Greedy over seeded orders.
    for (uint64_t trial = 0; trial < 64 && !res.found; ++trial) {
      std::vector<int> order(m);
      std::iota(order.begin(), order.end(), 0);
      CounterRng rng(0xfa25e7, trial);
      for (int i = m - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform(i + 1)]);
      chosen.clear();
      for (int idx : order) {
        bool ok = true;
        for (int c : chosen)
          if (conflict[c][idx]) {
            ok = false;
            break;
          }
        if (ok) chosen.push_back(idx);
        if ((int)chosen.size() >= size_floor) {
          res.found = true;
          break;
        }
      }
    }
  }
  if (res.found)
    for (int idx : chosen) res.witness.push_back(b_set[idx]);
  return res;
}

}  // namespace psim
