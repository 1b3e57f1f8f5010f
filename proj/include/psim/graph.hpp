#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "psim/bits.hpp"
#include "psim/rng.hpp"

namespace psim {

constexpr int kUnreachable = std::numeric_limits<int>::max();

// Immutable undirected simple graph. Vertices are dense indices 0..n-1;
// every vertex additionally carries a unique identifier of id_bits bits,
// assigned as a seeded permutation of [n] so that ID != index in general.
struct Graph {
  int n = 0;
  std::vector<std::vector<int>> adj;  // sorted neighbor indices
  std::vector<uint64_t> ids;
  int id_bits = 0;

  int degree(int v) const { return (int)adj[v].size(); }

  int max_degree() const {
    int d = 0;
    for (int v = 0; v < n; ++v) d = std::max(d, degree(v));
    return d;
  }

  long long num_edges() const {
    long long m = 0;
    for (int v = 0; v < n; ++v) m += degree(v);
    return m / 2;
  }

  bool has_edge(int u, int v) const {
    return std::binary_search(adj[u].begin(), adj[u].end(), v);
  }

  int index_of_id(uint64_t id) const {
    auto it = id_to_index_.find(id);
    if (it == id_to_index_.end()) throw std::out_of_range("unknown vertex id");
    return it->second;
  }

  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                          uint64_t id_seed = 1, int id_slack = 2) {
    if (n < 0) throw std::invalid_argument("negative vertex count");
    Graph g;
    g.n = n;
    g.adj.assign(n, {});
    for (auto [u, v] : edges) {
      if (u < 0 || u >= n || v < 0 || v >= n)
        throw std::invalid_argument("edge endpoint out of range");
      if (u == v) throw std::invalid_argument("self-loop");
      g.adj[u].push_back(v);
      g.adj[v].push_back(u);
    }
    for (int v = 0; v < n; ++v) {
      auto& a = g.adj[v];
      std::sort(a.begin(), a.end());
      if (std::adjacent_find(a.begin(), a.end()) != a.end())
        throw std::invalid_argument("parallel edge");
    }
    g.assign_ids(id_seed, id_slack);
    return g;
  }

  void assign_ids(uint64_t id_seed, int id_slack = 2) {
    ids.resize(n);
    std::iota(ids.begin(), ids.end(), 0);
    CounterRng rng(0x1d5eed, id_seed);
    for (int i = n - 1; i > 0; --i)
      std::swap(ids[i], ids[rng.uniform(i + 1)]);
    id_bits = ceil_log2(std::max<uint64_t>(2, n)) + id_slack;
    rebuild_id_index();
  }

  void rebuild_id_index() {
    id_to_index_.clear();
    for (int v = 0; v < n; ++v) {
      if (!id_to_index_.emplace(ids[v], v).second)
        throw std::invalid_argument("duplicate vertex id");
    }
  }

 private:
  std::unordered_map<uint64_t, int> id_to_index_;
};

// BFS distances from src, capped at max_depth (kUnreachable beyond).
inline std::vector<int> bfs_distances(const Graph& g, int src,
                                      int max_depth = kUnreachable) {
  std::vector<int> dist(g.n, kUnreachable);
  std::queue<int> q;
  dist[src] = 0;
  q.push(src);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (dist[u] >= max_depth) continue;
    for (int w : g.adj[u])
      if (dist[w] == kUnreachable) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
  }
  return dist;
}

inline std::vector<std::vector<int>> all_pairs_distances(const Graph& g) {
  std::vector<std::vector<int>> d(g.n);
  for (int v = 0; v < g.n; ++v) d[v] = bfs_distances(g, v);
  return d;
}

// N^s(v) intersected with an optional restriction set; excludes v itself.
inline std::vector<int> dist_k_neighborhood(
    const Graph& g, int v, int s,
    const std::optional<std::vector<int>>& restrict_to = std::nullopt) {
  if (s < 0) throw std::invalid_argument("negative radius");
  std::vector<int> out;
  if (s == 0) return out;
  auto dist = bfs_distances(g, v, s);
  std::vector<char> allowed;
  if (restrict_to) {
    allowed.assign(g.n, 0);
    for (int w : *restrict_to) allowed[w] = 1;
  }
  for (int w = 0; w < g.n; ++w) {
    if (w == v || dist[w] > s) continue;
    if (restrict_to && !allowed[w]) continue;
    out.push_back(w);
  }
  return out;
}

// Lazy view of G^s: edge (u,v) iff 1 <= dist_base(u,v) <= s.
struct PowerView {
  const Graph* base;
  int s;

  PowerView(const Graph& g, int s_) : base(&g), s(s_) {
    if (s < 1) throw std::invalid_argument("power exponent must be >= 1");
  }

  std::vector<int> neighbors(int v) const {
    return dist_k_neighborhood(*base, v, s);
  }
};

inline Graph power_graph(const Graph& g, int k) {
  if (k < 1) throw std::invalid_argument("power exponent must be >= 1");
  Graph out;
  out.n = g.n;
  out.adj.assign(g.n, {});
  out.ids = g.ids;
  out.id_bits = g.id_bits;
  for (int v = 0; v < g.n; ++v) out.adj[v] = dist_k_neighborhood(g, v, k);
  out.rebuild_id_index();
  return out;
}

// BFS tree of bounded depth. parent[v] == -1 at the root, -2 for
// non-members. Parent ties go to the neighbor with the smallest ID.
struct BfsTree {
  int root = -1;
  int depth = 0;
  std::vector<int> parent;
  std::vector<int> hop;  // distance to root; kUnreachable for non-members

  bool is_member(int v) const { return parent[v] != -2; }

  std::vector<int> members() const {
    std::vector<int> out;
    for (int v = 0; v < (int)parent.size(); ++v)
      if (is_member(v)) out.push_back(v);
    return out;
  }

  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> ch(parent.size());
    for (int v = 0; v < (int)parent.size(); ++v)
      if (parent[v] >= 0) ch[parent[v]].push_back(v);
    return ch;
  }
};

inline BfsTree bfs_tree(const Graph& g, int root, int depth) {
  if (depth < 0) throw std::invalid_argument("negative depth");
  BfsTree t;
  t.root = root;
  t.depth = depth;
  t.parent.assign(g.n, -2);
  t.hop.assign(g.n, kUnreachable);
  t.parent[root] = -1;
  t.hop[root] = 0;
  std::vector<int> frontier{root};
  for (int d = 0; d < depth && !frontier.empty(); ++d) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int w : g.adj[u]) {
        if (t.hop[w] <= d + 1) {
          if (t.hop[w] == d + 1 && g.ids[u] < g.ids[t.parent[w]])
            t.parent[w] = u;
          continue;
        }
        t.hop[w] = d + 1;
        t.parent[w] = u;
        next.push_back(w);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    frontier = std::move(next);
  }
  return t;
}

// Induced subgraph on `vertices` (indices into g). IDs and id width are
// preserved; `origin` maps new indices back to g.
struct InducedGraph {
  Graph graph;
  std::vector<int> origin;
};

inline InducedGraph induced_subgraph(const Graph& g,
                                     std::vector<int> vertices) {
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()),
                 vertices.end());
  std::vector<int> remap(g.n, -1);
  for (int i = 0; i < (int)vertices.size(); ++i) remap[vertices[i]] = i;
  InducedGraph out;
  out.origin = vertices;
  out.graph.n = (int)vertices.size();
  out.graph.adj.assign(out.graph.n, {});
  out.graph.ids.resize(out.graph.n);
  out.graph.id_bits = g.id_bits;
  for (int i = 0; i < out.graph.n; ++i) {
    out.graph.ids[i] = g.ids[vertices[i]];
    for (int w : g.adj[vertices[i]])
      if (remap[w] >= 0) out.graph.adj[i].push_back(remap[w]);
  }
  out.graph.rebuild_id_index();
  return out;
}

inline std::vector<std::vector<int>> connected_components(
    const Graph& g, const std::vector<int>& within) {
  std::vector<char> in(g.n, 0), seen(g.n, 0);
  for (int v : within) in[v] = 1;
  std::vector<std::vector<int>> comps;
  for (int s : within) {
    if (seen[s]) continue;
    std::vector<int> comp;
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      comp.push_back(u);
      for (int w : g.adj[u])
        if (in[w] && !seen[w]) {
          seen[w] = 1;
          q.push(w);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline bool is_connected(const Graph& g) {
  if (g.n == 0) return true;
  auto dist = bfs_distances(g, 0);
  for (int v = 0; v < g.n; ++v)
    if (dist[v] == kUnreachable) return false;
  return true;
}

inline int graph_diameter(const Graph& g) {
  int d = 0;
  for (int v = 0; v < g.n; ++v)
    for (int x : bfs_distances(g, v))
      if (x != kUnreachable) d = std::max(d, x);
  return d;
}

// ---------------------------------------------------------------------------
// Deterministic generators.

enum class GraphKind { path, cycle, grid, random_gnp, random_regular };

struct GenParams {
  int n = 0;
  double p = 0.0;  // random_gnp
  int d = 0;       // random_regular
  int rows = 0, cols = 0;  // grid; if 0, use n as rows*cols with cols given
  uint64_t id_seed = 1;
  int id_slack = 2;
};

inline Graph generate(GraphKind kind, const GenParams& params,
                      uint64_t seed = 0) {
  const int n = params.n;
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case GraphKind::path: {
      if (n < 1) throw std::invalid_argument("path needs n >= 1");
      for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
      break;
    }
    case GraphKind::cycle: {
      if (n < 3) throw std::invalid_argument("cycle needs n >= 3");
      for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
      break;
    }
    case GraphKind::grid: {
      int r = params.rows, c = params.cols;
      if (r <= 0 || c <= 0) throw std::invalid_argument("grid needs rows, cols");
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
          int v = i * c + j;
          if (j + 1 < c) edges.push_back({v, v + 1});
          if (i + 1 < r) edges.push_back({v, v + c});
        }
      return Graph::from_edges(r * c, edges, params.id_seed, params.id_slack);
    }
    case GraphKind::random_gnp: {
      if (n < 0 || params.p < 0 || params.p > 1)
        throw std::invalid_argument("gnp needs n >= 0, p in [0,1]");
      // Counter-based: the coin for pair (u,v) depends only on (seed,u,v).
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
          double coin = (counter_hash(0x67e9, seed, u, v) >> 11) * 0x1.0p-53;
          if (coin < params.p) edges.push_back({u, v});
        }
      break;
    }
    case GraphKind::random_regular: {
      int d = params.d;
      if (d < 0 || d >= n || (1ll * n * d) % 2 != 0)
        throw std::invalid_argument("impossible degree sequence");
      // Pairing model with seeded swap repair of self-loops and doubles;
      // deterministic for a fixed seed.
      for (uint64_t attempt = 0;; ++attempt) {
        if (attempt > 50)
          throw std::invalid_argument("random_regular: no simple pairing found");
        std::vector<int> stubs;
        stubs.reserve((size_t)n * d);
        for (int v = 0; v < n; ++v)
          for (int i = 0; i < d; ++i) stubs.push_back(v);
        CounterRng rng(0x4e6, seed, attempt);
        for (int i = (int)stubs.size() - 1; i > 0; --i)
          std::swap(stubs[i], stubs[rng.uniform(i + 1)]);
        std::vector<std::pair<int, int>> cand;
        for (size_t i = 0; i + 1 < stubs.size(); i += 2)
          cand.push_back({stubs[i], stubs[i + 1]});
        std::vector<std::vector<int>> mult(n, std::vector<int>(n, 0));
        auto bad = [&](const std::pair<int, int>& e) {
          return e.first == e.second || mult[e.first][e.second] > 1;
        };
        for (auto& e : cand)
          if (e.first != e.second) {
            mult[e.first][e.second]++;
            mult[e.second][e.first]++;
          }
        for (long long guard = 0; guard < 200000; ++guard) {
          int bad_at = -1;
          for (size_t i = 0; i < cand.size(); ++i)
            if (bad(cand[i])) {
              bad_at = (int)i;
              break;
            }
          if (bad_at < 0) break;
          size_t j = rng.uniform(cand.size());
          if ((size_t)bad_at == j) continue;
          auto [u, v] = cand[bad_at];
          auto [x, y] = cand[j];
          // Swap partners: (u,v),(x,y) -> (u,y),(x,v).
          if (u == y || x == v) continue;
          if (mult[u][y] > 0 || mult[x][v] > 0) continue;
          auto detach = [&](int a, int b) {
            if (a != b) {
              mult[a][b]--;
              mult[b][a]--;
            }
          };
          detach(u, v);
          detach(x, y);
          cand[bad_at] = {u, y};
          cand[j] = {x, v};
          mult[u][y]++;
          mult[y][u]++;
          mult[x][v]++;
          mult[v][x]++;
        }
        bool ok = true;
        for (auto& e : cand)
          if (bad(e)) ok = false;
        if (ok) {
          edges = std::move(cand);
          break;
        }
      }
      break;
    }
  }
  return Graph::from_edges(n, edges, params.id_seed, params.id_slack);
}

inline Graph gnp(int n, double p, uint64_t seed, uint64_t id_seed = 1) {
  GenParams gp;
  gp.n = n;
  gp.p = p;
  gp.id_seed = id_seed;
  return generate(GraphKind::random_gnp, gp, seed);
}

inline Graph path_graph(int n, uint64_t id_seed = 1) {
  GenParams gp;
  gp.n = n;
  gp.id_seed = id_seed;
  return generate(GraphKind::path, gp);
}

inline Graph cycle_graph(int n, uint64_t id_seed = 1) {
  GenParams gp;
  gp.n = n;
  gp.id_seed = id_seed;
  return generate(GraphKind::cycle, gp);
}

inline Graph complete_graph(int n, uint64_t id_seed = 1) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) edges.push_back({u, v});
  return Graph::from_edges(n, edges, id_seed);
}

inline Graph grid_graph(int rows, int cols, uint64_t id_seed = 1) {
  GenParams gp;
  gp.rows = rows;
  gp.cols = cols;
  gp.id_seed = id_seed;
  return generate(GraphKind::grid, gp);
}

inline Graph star_graph(int leaves, uint64_t id_seed = 1) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i <= leaves; ++i) edges.push_back({0, i});
  return Graph::from_edges(leaves + 1, edges, id_seed);
}

}  // namespace psim
