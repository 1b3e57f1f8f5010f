#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "psim/congest.hpp"
#include "psim/graph.hpp"

namespace psim {

using json = nlohmann::json;

// Edge-list text format: header "n m", then one "u v" pair per line.
inline std::string graph_to_edge_list(const Graph& g) {
  std::ostringstream os;
  os << g.n << " " << g.num_edges() << "\n";
  for (int u = 0; u < g.n; ++u)
    for (int v : g.adj[u])
      if (u < v) os << u << " " << v << "\n";
  return os.str();
}

inline Graph graph_from_edge_list(std::istream& in, uint64_t id_seed = 1,
                                  int id_slack = 2) {
  int n;
  long long m;
  if (!(in >> n >> m)) throw std::invalid_argument("bad graph header");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(m);
  for (long long i = 0; i < m; ++i) {
    int u, v;
    if (!(in >> u >> v)) throw std::invalid_argument("bad edge line");
    edges.push_back({u, v});
  }
  return Graph::from_edges(n, edges, id_seed, id_slack);
}

inline void save_graph(const Graph& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << graph_to_edge_list(g);
}

inline Graph load_graph(const std::string& path, uint64_t id_seed = 1,
                        int id_slack = 2) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return graph_from_edge_list(f, id_seed, id_slack);
}

inline json to_json(const RoundReport& r) {
  json v = json::array();
  for (const auto& x : r.violations)
    v.push_back({{"round", x.round},
                 {"from", x.from},
                 {"to", x.to},
                 {"bits", x.bits},
                 {"budget", x.budget}});
  return {{"rounds_used", r.rounds_used},
          {"max_bits_on_edge", r.max_bits_on_edge},
          {"total_bits", r.total_bits},
          {"violations", v},
          {"timed_out", r.timed_out},
          {"nd_oracle_used", r.nd_oracle_used}};
}

inline json to_json(const SimConfig& c, const Graph& g) {
  return {{"bandwidth_bits", c.resolve_bandwidth(g)},
          {"c_bw", c.c_bw},
          {"rng_seed", c.rng_seed},
          {"round_limit", c.round_limit}};
}

}  // namespace psim
