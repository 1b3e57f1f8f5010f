// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every expected value is pinned here, computed by the
// brute-force oracles in psim/verify.hpp.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "psim/pipelines.hpp"

namespace psim {
namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", idx,
              what.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::vector<int> everyone(const Graph& g) {
  std::vector<int> v(g.n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Graph connected_gnp(int n, double p, uint64_t seed) {
  for (uint64_t s = seed;; ++s) {
    Graph g = gnp(n, p, s, /*id_seed=*/s + 17);
    if (is_connected(g)) return g;
  }
}

struct SparsifyCase {
  int k, n;
  double p;
  uint64_t seed;
};

std::vector<SparsifyCase> sparsify_corpus() {
  // 20 instances across k in {1,2,3} and n in {64,128,256}.
  return {
      {1, 64, 0.20, 1},  {1, 64, 0.20, 2},  {1, 64, 0.60, 3},
      {1, 128, 0.10, 4}, {1, 128, 0.30, 5}, {1, 256, 0.06, 6},
      {1, 256, 0.15, 7}, {2, 64, 0.20, 8},  {2, 64, 0.12, 9},
      {2, 64, 0.30, 10}, {2, 128, 0.10, 11}, {2, 128, 0.06, 12},
      {2, 256, 0.05, 13}, {2, 256, 0.03, 14}, {3, 64, 0.12, 15},
      {3, 64, 0.08, 16}, {3, 64, 0.20, 17},  {3, 128, 0.05, 18},
      {3, 128, 0.08, 19}, {3, 256, 0.03, 20},
  };
}

// Criteria 1 and part of 2: sparsification contract plus the hard
// derandomized-stage guarantee across the corpus.
void criterion_1_and_2() {
  double t0 = now_seconds();
  SparsifyParams params;  // desk profile; stage oracles hard-assert inside
  int pass_count = 0, total = 0, stages_run = 0, exact_stages = 0;
  bool clause_failure = false;
  for (const auto& c : sparsify_corpus()) {
    Graph g = connected_gnp(c.n, c.p, c.seed);
    SimConfig cfg;
    cfg.rng_seed = c.seed;
    ++total;
    try {
      auto res = sparsify_power(g, c.k, everyone(g), params, cfg);
      stages_run += (int)res.stats.size();
      for (auto& st : res.stats) exact_stages += st.exact_mode ? 1 : 0;
      bool cap_ok = check_degree_cap(g, res.q, c.k, res.claimed_cap).pass;
      bool dom_ok =
          check_ruling_set(g, res.q, 1, res.claimed_domination).dominating;
      if (cap_ok && dom_ok && res.report.violations.empty()) ++pass_count;
    } catch (const std::logic_error&) {
      clause_failure = true;  // a derandomized stage clause fired
    }
  }
  double elapsed = now_seconds() - t0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d/%d instances, %.1fs (budget 300s)",
                pass_count, total, elapsed);
  report(1, pass_count == total && elapsed < 300.0,
         "sparsify_power degree cap + domination, desk profile", buf);

  // Hard guarantee: no stage clause failed anywhere in the corpus, and
  // exact-mode stages are exercised on small instances.
  SparsifyParams tiny;
  tiny.indep = 2;
  tiny.slack = 1;
  tiny.c_samp = 1;
  int tiny_exact = 0, tiny_stages = 0;
  bool tiny_failure = false;
  for (uint64_t seed : {3, 5, 8, 13}) {
    Graph g = connected_gnp(12, 0.9, seed);
    SimConfig cfg;
    try {
      auto ov = overlay_radius1(g, everyone(g), cfg);
      auto det = det_sparsify_g(g, 1, ov, g.max_degree(), tiny, cfg,
                                graph_log_n(g));
      tiny_stages += (int)det.stats.size();
      for (auto& st : det.stats) tiny_exact += st.exact_mode ? 1 : 0;
    } catch (const std::logic_error&) {
      tiny_failure = true;
    }
  }

  // Randomized baseline: per-node clause failure frequency below 5% over
  // 200 seeded stage runs on a near-regular dense instance.
  // Degree 48 >= 8 log n keeps the stage count positive, so the sampled
  // stage is exercised in its intended regime.
  Graph reg;
  {
    GenParams gp;
    gp.n = 64;
    gp.d = 48;
    gp.id_seed = 3;
    reg = generate(GraphKind::random_regular, gp, 11);
  }
  SparsifyParams rp;
  long long checks = 0, fails = 0;
  int log_n = graph_log_n(reg);
  for (int run = 0; run < 200; ++run) {
    StageState st;
    st.i = 1;
    st.h = everyone(reg);
    st.delta_a = reg.max_degree();
    auto next = random_stage(reg, 1, st, rp, 1000 + run, log_n);
    auto clauses = check_stage_clauses(reg, 1, st.h, next.m, next.h,
                                       st.delta_a, 1, rp.cap(log_n));
    checks += 3ll * reg.n;
    fails += clauses.cap_violations + clauses.domination_violations +
             clauses.shrink_violations;
  }
  double freq = (double)fails / (double)checks;
  char buf2[200];
  std::snprintf(buf2, sizeof(buf2),
                "corpus stages=%d (exact %d), tiny exact stages=%d/%d, "
                "randomized per-node clause failure %.2f%%",
                stages_run, exact_stages, tiny_exact, tiny_stages,
                100.0 * freq);
  report(2,
         !clause_failure && !tiny_failure && tiny_exact == tiny_stages &&
             tiny_stages > 0 && freq < 0.05,
         "derandomized stages never fail; randomized baseline under 5%",
         buf2);
}

void criterion_3() {
  SparsifyParams params;
  int pass_count = 0, total = 0;
  for (int k : {1, 2, 3}) {
    for (int i = 0; i < 10; ++i) {
      int n = 40 + 8 * (i % 3);
      double p = k == 1 ? 0.18 : (k == 2 ? 0.14 : 0.10);
      Graph g = connected_gnp(n, p, 100 * k + i);
      SimConfig cfg;
      ++total;
      try {
        auto res = k_ruling_set_of_gk(g, k, params, cfg);
        auto check = check_ruling_set(g, res.set, k + 1, std::max(1, k * k));
        if (check.pass && res.alpha == k + 1) ++pass_count;
      } catch (const std::exception&) {
      }
    }
  }
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%d/%d instances, (k=2)->(3,4), (k=3)->(4,9)",
                pass_count, total);
  report(3, pass_count == total, "deterministic (k+1, k^2)-ruling sets", buf);
}

void criterion_4() {
  bool ok = true;
  std::string detail;
  for (int maxdeg : {4, 8}) {
    int half = maxdeg / 2;
    std::vector<std::pair<int, int>> edges{{0, 1}};
    std::vector<int> q;
    for (int i = 0; i < half; ++i) {
      edges.push_back({0, 2 + i});
      q.push_back(2 + i);
    }
    for (int i = 0; i < half; ++i) {
      edges.push_back({1, 2 + half + i});
      q.push_back(2 + half + i);
    }
    Graph g = Graph::from_edges(2 + maxdeg, edges, 3);
    SimConfig cfg;
    cfg.bandwidth_bits = 4 * std::max(maxdeg, g.id_bits);
    auto ov = build_overlay(g, q, 3, cfg);

    std::map<int, Bits> msgs;
    for (int x : q) msgs[x] = Bits::of_uint((uint64_t)x, 8);
    auto bc = broadcast_from_q(g, ov, msgs, 8, cfg);
    auto key = std::make_pair(0, 1);
    int bc_cross = (int)bc.roots_on_edge[key].size();
    bool bc_ok = bc.report.clean() &&
                 bc.report.max_bits_on_edge <= cfg.bandwidth_bits &&
                 bc_cross == maxdeg;

    std::map<int, std::vector<std::pair<uint64_t, Bits>>> out;
    for (int x : q)
      for (uint64_t y : ov.known[x]) out[x].push_back({y, Bits::of_uint(1, 2)});
    auto qm = q_message(g, ov, out, 2, cfg);
    int fwd = (int)qm.tuples_on_edge[{0, 1}].size();
    int rev = (int)qm.tuples_on_edge[{1, 0}].size();
    bool qm_ok = qm.report.clean() &&
                 qm.report.max_bits_on_edge <= cfg.bandwidth_bits &&
                 fwd == maxdeg * maxdeg / 4 && rev == maxdeg * maxdeg / 4;
    char buf[96];
    std::snprintf(buf, sizeof(buf),
                  "[maxdeg=%d bcast=%d qmsg=%d/%d per direction] ", maxdeg,
                  bc_cross, fwd, rev);
    detail += buf;
    ok = ok && bc_ok && qm_ok;
  }
  report(4, ok, "Figure-1 gadget congestion counts, exact", detail);
}

struct EchoIds {
  LocalView view;
  std::vector<uint64_t> heard;
  bool done = false;
  explicit EchoIds(const LocalView& v) : view(v) {}
  void init(const LocalView&) {}
  bool halted() const { return done; }
  void on_round(RoundApi& api) {
    for (const auto& m : api.inbox())
      heard.push_back(m.payload.read_uint(0, view.id_bits));
    if (api.round() == 1)
      for (uint64_t nb : view.neighbor_ids)
        api.send(nb, Bits::of_uint(view.id, view.id_bits));
    else
      done = true;
  }
};

void criterion_5() {
  int pass_count = 0, total = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    int n = 20 + 4 * (int)(seed % 3);
    int s = 1 + (int)(seed % 3);
    Graph g = connected_gnp(n, 0.18, 40 + seed);
    SimConfig cfg;
    std::vector<int> q;
    for (int v = 0; v < g.n; ++v)
      if (counter_hash(seed, v) % 3 == 0) q.push_back(v);
    ++total;
    auto ov = build_overlay(g, q, s, cfg);
    auto sim = simulate_on_power_subgraph<EchoIds>(
        g, ov, cfg, cfg, [](int, const LocalView& v) { return EchoIds(v); });
    auto induced = induced_subgraph(power_graph(g, s), q);
    auto direct = run_sim<EchoIds>(
        induced.graph, cfg, [](int, const LocalView& v) { return EchoIds(v); });
    bool same = sim.inner_report.rounds_used == direct.report.rounds_used &&
                sim.inner_report.total_bits == direct.report.total_bits;
    for (size_t i = 0; i < sim.q.size() && same; ++i) {
      int j = induced.graph.index_of_id(g.ids[sim.q[i]]);
      same = sim.programs[i].heard == direct.programs[j].heard;
    }
    if (same) ++pass_count;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d/%d triples byte-equal", pass_count,
                total);
  report(5, pass_count == total, "virtual-graph simulation fidelity", buf);
}

void criterion_6() {
  bool ok = true;
  long long tuples_checked = 0;
  for (int a = 1; a <= 3 && ok; ++a)
    for (int b = 1; b <= 3 && ok; ++b)
      for (int kk = 1; kk <= 3 && ok; ++kk) {
        HashFamily fam(a, b, kk);
        int t = std::min<int>(kk, 1 << a);
        std::vector<int> pick(t);
        std::function<bool(int, int)> choose = [&](int start,
                                                   int depth) -> bool {
          if (depth == t) {
            std::map<std::vector<uint64_t>, long long> counts;
            for (uint64_t s = 0; s < (1ull << fam.gamma); ++s) {
              Bits seed = Bits::of_uint(s, fam.gamma);
              std::vector<uint64_t> vals(t);
              for (int i = 0; i < t; ++i)
                vals[i] = fam.eval(seed, (uint64_t)pick[i]);
              counts[vals]++;
            }
            long long expect = (1ll << fam.gamma) >> (b * t);
            if (expect <= 0 || counts.size() != (size_t)(1ull << (b * t)))
              return false;
            for (auto& [vals, c] : counts)
              if (c != expect) return false;
            ++tuples_checked;
            return true;
          }
          for (int i = start; i < (1 << a); ++i) {
            pick[depth] = i;
            if (!choose(i + 1, depth + 1)) return false;
          }
          return true;
        };
        ok = choose(0, 0);
      }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%lld input tuples, zero deviation",
                tuples_checked);
  report(6, ok, "k-wise hash exactness over all (a,b,k) <= 3", buf);
}

void criterion_7() {
  int pass_count = 0, total = 0;
  double worst_fit = 0;
  for (int k : {1, 2, 3}) {
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      int n = k == 1 ? 96 : (k == 2 ? 64 : 48);
      Graph g = connected_gnp(n, k == 1 ? 0.08 : 0.06, 200 * k + seed);
      SimConfig cfg;
      MisGkParams params;
      params.c_pre = (seed % 2) ? 1 : 8;  // exercise the post phase too
      params.s_conn = (seed % 2) ? 1 : 8;
      ++total;
      try {
        auto res = mis_gk(g, k, params, seed, cfg);
        if (check_mis(power_graph(g, k), res.set)) ++pass_count;
      } catch (const std::exception&) {
      }
      // Report-only scaling probe: the beeping run self-terminates once
      // everyone is decided, so a large cap measures steps to completion.
      if (seed == 1) {
        auto probe = beeping_mis_gk(g, k, 1 << 14, seed, cfg);
        double steps_to_done =
            std::ceil((double)probe.report.rounds_used / (2 * k + 2));
        double denom = k * std::log2(std::max(2.0, power_degree_bound(g, k)));
        worst_fit = std::max(worst_fit, steps_to_done / denom);
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "%d/%d oracle-valid; pre-shattering steps <= %.1f*k*logDelta",
                pass_count, total, worst_fit);
  report(7, pass_count == total, "randomized MIS of G^k", buf);
}

void criterion_8() {
  int violations = 0;
  size_t max_comp = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Graph g = gnp(2048, 16.0 / 2047.0, 3000 + seed);
    SimConfig cfg;
    double delta = std::max(2, g.max_degree());
    int steps = (int)std::ceil(3 * std::log2(delta));
    auto out = beeping_mis_gk(g, 1, steps, seed, cfg);
    double t = std::log2((double)g.n) / std::log2(delta);
    double size_bound = 4.0 * t * std::pow(delta, 4.0);
    int floor_t = (int)std::ceil(t);
    for (const auto& comp : out.components) {
      max_comp = std::max(max_comp, comp.size());
      if ((double)comp.size() > size_bound) ++violations;
      if (comp.size() > 20) {
        ++violations;  // larger components fail the batch
        continue;
      }
      auto far = max_independent_far_set(g, comp, 5, floor_t);
      if (far.found) ++violations;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "20 seeds, max undecided component %zu, %d violations",
                max_comp, violations);
  report(8, violations == 0, "shattering statistics on gnp(2048, ~16)", buf);
}

void criterion_9() {
  int pass_count = 0, total = 0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    int k = 1 + (int)(seed % 2);
    Graph g = connected_gnp(64, 0.07, 500 + seed);
    SimConfig cfg;
    auto sh = beeping_mis_gk(g, k, 2, seed, cfg);
    ++total;
    if (sh.undecided.empty()) {
      ++pass_count;  // vacuous but counted: nothing left to partition
      continue;
    }
    auto [rs, part] = ball_ruling_set(g, 5 * k + 1, sh.undecided,
                                      coloring_from_ids(g), 2, cfg);
    bool ok = check_ball_partition(g, part, sh.undecided);
    auto bg = build_distance_k_ballgraph(g, part, k, cfg);
    ok = ok && check_distance_k_ballgraph(g, bg, part, k);
    for (int v = 0; v < g.n && ok; ++v)
      if (part.ball_owner[v] >= 0) ok = bg.plus_owner[v] == part.ball_owner[v];
    if (ok) ++pass_count;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d/%d instances", pass_count, total);
  report(9, pass_count == total,
         "ball partitions and distance-k ball graphs", buf);
}

void criterion_10() {
  int pass_count = 0, total = 0, reruns = 0;
  std::vector<std::pair<int, int>> cases{{1, 2}, {2, 2}, {2, 3}};
  for (auto [k, beta] : cases) {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      Graph g = connected_gnp(k == 1 ? 96 : 64, k == 1 ? 0.08 : 0.07,
                              700 + 37 * k + seed);
      SimConfig cfg;
      MisGkParams mp;
      mp.c_pre = 1;
      ++total;
      bool ok = false;
      for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
        if (attempt > 0) ++reruns;
        try {
          auto res = beta_ruling_set_gk(g, k, beta, seed + 1000 * attempt, cfg,
                                        mp);
          ok = check_ruling_set(g, res.set, k + 1, beta * k).pass;
        } catch (const std::exception&) {
        }
      }
      if (ok) ++pass_count;
    }
  }
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%d/%d runs pass (%d reruns logged)",
                pass_count, total, reruns);
  report(10, pass_count >= (total * 95 + 99) / 100,
         "beta-ruling sets of G^k", buf);
}

void criterion_11() {
  bool ok = true;
  std::string detail;
  auto same_report = [](const RoundReport& a, const RoundReport& b) {
    return a.rounds_used == b.rounds_used && a.total_bits == b.total_bits &&
           a.max_bits_on_edge == b.max_bits_on_edge;
  };

  {
    Graph g = connected_gnp(40, 0.2, 7);
    SimConfig cfg;
    SparsifyParams params;
    auto a = k_ruling_set_of_gk(g, 2, params, cfg);
    auto b = k_ruling_set_of_gk(g, 2, params, cfg);
    bool same = a.set == b.set && same_report(a.rounds, b.rounds);
    detail += same ? "[deterministic pipeline ok] " : "[deterministic DIFFERS] ";
    ok = ok && same;
  }
  {
    Graph g = connected_gnp(48, 0.1, 9);
    SimConfig cfg;
    MisGkParams mp;
    mp.c_pre = 1;
    auto a = mis_gk(g, 2, mp, 5, cfg);
    auto b = mis_gk(g, 2, mp, 5, cfg);
    bool same = a.set == b.set && same_report(a.report, b.report);
    detail += same ? "[seeded mis_gk ok] " : "[seeded mis_gk DIFFERS] ";
    ok = ok && same;
  }
  {
    Graph g = connected_gnp(48, 0.1, 11);
    SimConfig cfg;
    auto a = luby_gk(g, 2, 3, 13, cfg);
    auto b = luby_gk(g, 2, 3, 13, cfg);
    bool same = a.set == b.set && same_report(a.report, b.report);
    detail += same ? "[seeded luby ok]" : "[seeded luby DIFFERS]";
    ok = ok && same;
  }
  report(11, ok, "byte-identical reruns", detail);
}

}  // namespace
}  // namespace psim

int main() {
  double t0 = psim::now_seconds();
  psim::criterion_1_and_2();
  psim::criterion_3();
  psim::criterion_4();
  psim::criterion_5();
  psim::criterion_6();
  psim::criterion_7();
  psim::criterion_8();
  psim::criterion_9();
  psim::criterion_10();
  psim::criterion_11();
  std::printf("acceptance: %s (%.1fs total)\n",
              psim::g_failures == 0 ? "ALL CRITERIA PASS"
                                    : "FAILURES PRESENT",
              psim::now_seconds() - t0);
  return psim::g_failures == 0 ? 0 : 1;
}
