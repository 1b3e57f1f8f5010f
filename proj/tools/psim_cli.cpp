// Experiment runner: generate or load graphs, execute a pipeline across
// seeds, verify every result against the brute-force oracles, and emit
// CSV/JSON reports. Exits nonzero if any oracle fails.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "psim/io.hpp"
#include "psim/pipelines.hpp"

namespace psim {
namespace {

constexpr const char* kCsvHeader =
    "# psim-results v1\n"
    "n,delta,k,algorithm,profile,seed,rounds,max_bits,total_bits,oracle_pass,"
    "alpha,beta,set_size\n";

struct RunRecord {
  std::string algo;
  std::string profile;
  int n = 0, delta = 0, k = 1;
  uint64_t seed = 0;
  std::vector<int> set;
  int alpha = 0, beta = 0;
  RoundReport report;
  bool oracle_pass = false;
  json checks = json::array();
};

std::vector<int> everyone(const Graph& g) {
  std::vector<int> v(g.n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

struct Options {
  std::string graph_file;
  std::string kind = "gnp";
  int n = 64;
  double p = 0.1;
  int d = 3, rows = 0, cols = 0;
  uint64_t gen_seed = 1, id_seed = 1;
  std::string algo = "k_ruling_set";
  int k = 1;
  int beta = 2;
  double f = 4.0;
  std::string profile = "desk";
  std::string seeds = "1";
  int bandwidth = 0;
  int c_pre = 8;
  std::string out;
};

Graph make_graph(const Options& opt, uint64_t cell_n = 0) {
  if (!opt.graph_file.empty()) return load_graph(opt.graph_file, opt.id_seed);
  GenParams gp;
  gp.n = cell_n ? (int)cell_n : opt.n;
  gp.p = opt.p;
  gp.d = opt.d;
  gp.rows = opt.rows;
  gp.cols = opt.cols;
  gp.id_seed = opt.id_seed;
  GraphKind kind;
  if (opt.kind == "path")
    kind = GraphKind::path;
  else if (opt.kind == "cycle")
    kind = GraphKind::cycle;
  else if (opt.kind == "grid")
    kind = GraphKind::grid;
  else if (opt.kind == "gnp")
    kind = GraphKind::random_gnp;
  else if (opt.kind == "regular")
    kind = GraphKind::random_regular;
  else
    throw CLI::ValidationError("--kind must be path|cycle|grid|gnp|regular");
  return generate(kind, gp, opt.gen_seed);
}

std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> out;
  size_t dots = spec.find("..");
  if (dots != std::string::npos) {
    uint64_t lo = std::stoull(spec.substr(0, dots));
    uint64_t hi = std::stoull(spec.substr(dots + 2));
    for (uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::string cur;
  for (char c : spec + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

void add_check(RunRecord& rec, const std::string& type, bool pass, json extra) {
  extra["type"] = type;
  extra["pass"] = pass;
  rec.checks.push_back(extra);
  rec.oracle_pass = rec.oracle_pass && pass;
}

RunRecord run_one(const Graph& g, const Options& opt, uint64_t seed) {
  RunRecord rec;
  rec.algo = opt.algo;
  rec.profile = opt.profile;
  rec.n = g.n;
  rec.delta = g.max_degree();
  rec.k = opt.k;
  rec.seed = seed;
  rec.oracle_pass = true;

  SimConfig cfg;
  cfg.bandwidth_bits = opt.bandwidth;
  cfg.rng_seed = seed;
  SparsifyParams params = opt.profile == "paper"
                              ? SparsifyParams::paper_profile()
                              : SparsifyParams::desk_profile();
  int log_n = graph_log_n(g);

  if (opt.algo == "sparsify_power") {
    auto res = sparsify_power(g, opt.k, everyone(g), params, cfg);
    rec.set = res.q;
    rec.beta = res.claimed_domination;
    rec.report = res.report;
    for (const auto& st : res.stats)
      rec.checks.push_back({{"type", "stage_snapshot"},
                            {"s", st.s},
                            {"i", st.i},
                            {"h_size", st.h_size},
                            {"m_size", st.m_size},
                            {"max_active_degree", st.max_active_degree},
                            {"exact_mode", st.exact_mode}});
    auto cap = check_degree_cap(g, res.q, opt.k, res.claimed_cap);
    add_check(rec, "degree_cap", cap.pass,
              {{"cap", res.claimed_cap}, {"max", cap.max_degree}});
    auto dom = check_ruling_set(g, res.q, 1, res.claimed_domination);
    add_check(rec, "domination", dom.dominating,
              {{"beta", res.claimed_domination}});
  } else if (opt.algo == "sparsify_nd") {
    auto nd = decompose(g, everyone(g), 2 * opt.k + 1);
    auto res = sparsify_with_nd(g, opt.k, everyone(g), params, nd, cfg);
    rec.set = res.q;
    rec.beta = res.claimed_domination;
    rec.report = res.report;
    auto cap = check_degree_cap(g, res.q, opt.k, res.claimed_cap);
    add_check(rec, "degree_cap", cap.pass,
              {{"cap", res.claimed_cap}, {"max", cap.max_degree}});
    auto dom = check_ruling_set(g, res.q, 1, res.claimed_domination);
    add_check(rec, "domination", dom.dominating,
              {{"beta", res.claimed_domination}});
  } else if (opt.algo == "k_ruling_set") {
    auto res = k_ruling_set_of_gk(g, opt.k, params, cfg);
    rec.set = res.set;
    rec.alpha = res.alpha;
    rec.beta = opt.k * opt.k;
    rec.report = res.rounds;
    auto check = check_ruling_set(g, res.set, rec.alpha, std::max(1, rec.beta));
    add_check(rec, "ruling_set", check.pass,
              {{"alpha", rec.alpha}, {"beta", std::max(1, rec.beta)}});
  } else if (opt.algo == "awerbuch") {
    auto res = awerbuch_ruling_set(g, opt.k, coloring_from_ids(g), 2, cfg);
    rec.set = res.set;
    rec.alpha = res.alpha;
    rec.beta = res.beta;
    rec.report = res.rounds;
    auto check = check_ruling_set(g, res.set, res.alpha, res.beta);
    add_check(rec, "ruling_set", check.pass,
              {{"alpha", res.alpha}, {"beta", res.beta}});
  } else if (opt.algo == "beta_ruling_set") {
    MisGkParams mp;
    mp.c_pre = opt.c_pre;
    auto res = beta_ruling_set_gk(g, opt.k, opt.beta, seed, cfg, mp);
    rec.set = res.set;
    rec.alpha = res.alpha;
    rec.beta = res.beta;
    rec.report = res.rounds;
    auto check = check_ruling_set(g, res.set, res.alpha, res.beta);
    add_check(rec, "ruling_set", check.pass,
              {{"alpha", res.alpha}, {"beta", res.beta}});
  } else if (opt.algo == "luby") {
    auto res = luby_gk(g, opt.k, 3, seed, cfg);
    rec.set = res.set;
    rec.alpha = opt.k + 1;
    rec.beta = opt.k;
    rec.report = res.report;
    auto pk = power_graph(g, opt.k);
    add_check(rec, "mis_of_power", check_mis(pk, res.set), {{"k", opt.k}});
  } else if (opt.algo == "mis_gk") {
    MisGkParams mp;
    mp.c_pre = opt.c_pre;
    auto res = mis_gk(g, opt.k, mp, seed, cfg);
    rec.set = res.set;
    rec.alpha = opt.k + 1;
    rec.beta = opt.k;
    rec.report = res.report;
    rec.checks.push_back({{"type", "phase_rounds"},
                          {"pre", res.pre_rounds},
                          {"ruling", res.ruling_rounds},
                          {"ballgraph", res.ballgraph_rounds},
                          {"post", res.post_rounds}});
    auto pk = power_graph(g, opt.k);
    add_check(rec, "mis_of_power", check_mis(pk, res.set), {{"k", opt.k}});
  } else if (opt.algo == "mis_shattering_one" ||
             opt.algo == "mis_shattering_two") {
    auto approach = opt.algo == "mis_shattering_one"
                        ? ShatterApproach::one_phase
                        : ShatterApproach::two_phase;
    auto res = mis_g_shattering(g, approach, seed, cfg, opt.c_pre);
    rec.set = res.set;
    rec.alpha = 2;
    rec.beta = 1;
    rec.report = res.report;
    add_check(rec, "mis", check_mis(g, res.set), json::object());
  } else if (opt.algo == "kp12") {
    auto res = kp12_sparsify_step(g, opt.k, everyone(g), opt.f, seed, cfg);
    rec.set = res.q;
    rec.report = res.report;
    auto dom = check_ruling_set(g, res.q, 1, opt.k);
    add_check(rec, "domination", dom.dominating, {{"beta", opt.k}});
    rec.checks.push_back({{"type", "sparsity"},
                          {"measured_max_degree", res.measured_max_degree},
                          {"bound", 4 * opt.f * log_n}});
  } else {
    throw CLI::ValidationError("unknown --algo " + opt.algo);
  }
  return rec;
}

std::string csv_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.n << "," << r.delta << "," << r.k << "," << r.algo << ","
     << r.profile << "," << r.seed << "," << r.report.rounds_used << ","
     << r.report.max_bits_on_edge << "," << r.report.total_bits << ","
     << (r.oracle_pass ? 1 : 0) << "," << r.alpha << "," << r.beta << ","
     << r.set.size() << "\n";
  return os.str();
}

json detail_json(const Graph& g, const Options& opt, const RunRecord& r,
                 const SimConfig& cfg) {
  json set = json::array();
  for (int v : r.set) set.push_back(v);
  return {{"algorithm", r.algo},
          {"profile", r.profile},
          {"k", r.k},
          {"seed", r.seed},
          {"graph",
           {{"n", g.n},
            {"m", g.num_edges()},
            {"delta", g.max_degree()},
            {"id_seed", opt.id_seed}}},
          {"config", to_json(cfg, g)},
          {"set", set},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"report", to_json(r.report)},
          {"checks", r.checks},
          {"oracle_pass", r.oracle_pass}};
}

int cmd_generate(const Options& opt) {
  Graph g = make_graph(opt);
  if (opt.out.empty()) {
    std::cout << graph_to_edge_list(g);
  } else {
    save_graph(g, opt.out);
    std::cout << "wrote " << opt.out << " (n=" << g.n << " m=" << g.num_edges()
              << ")\n";
  }
  return 0;
}

int cmd_run(const Options& opt) {
  Graph g = make_graph(opt);
  SimConfig cfg;
  cfg.bandwidth_bits = opt.bandwidth;
  auto seeds = parse_seeds(opt.seeds);
  std::string csv = kCsvHeader;
  bool all_pass = true;
  for (uint64_t seed : seeds) {
    auto rec = run_one(g, opt, seed);
    all_pass = all_pass && rec.oracle_pass;
    csv += csv_row(rec);
    if (!opt.out.empty()) {
      cfg.rng_seed = seed;
      std::ofstream jf(opt.out + "." + std::to_string(seed) + ".json");
      jf << detail_json(g, opt, rec, cfg).dump(2) << "\n";
    }
  }
  if (opt.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream cf(opt.out + ".csv");
    cf << csv;
    std::cout << "wrote " << opt.out << ".csv (" << seeds.size() << " rows)\n";
  }
  if (!all_pass) {
    std::cerr << "oracle failure detected\n";
    return 2;
  }
  return 0;
}

int cmd_sweep(const Options& opt, const std::string& ns_spec,
              const std::string& ks_spec) {
  auto ns = parse_seeds(ns_spec);
  auto ks = parse_seeds(ks_spec);
  auto seeds = parse_seeds(opt.seeds);
  std::string csv =
      "# psim-sweep v1\nn,k,algorithm,profile,cells,median_rounds,median_bits,"
      "all_pass\n";
  bool all_pass = true;
  for (uint64_t n : ns)
    for (uint64_t k : ks) {
      Options cell = opt;
      cell.k = (int)k;
      Graph g = make_graph(cell, n);
      std::vector<long long> rounds, bits;
      bool cell_pass = true;
      for (uint64_t seed : seeds) {
        auto rec = run_one(g, cell, seed);
        rounds.push_back(rec.report.rounds_used);
        bits.push_back(rec.report.total_bits);
        cell_pass = cell_pass && rec.oracle_pass;
      }
      std::sort(rounds.begin(), rounds.end());
      std::sort(bits.begin(), bits.end());
      std::ostringstream os;
      os << n << "," << k << "," << opt.algo << "," << opt.profile << ","
         << seeds.size() << ","
         << (rounds.empty() ? 0 : rounds[rounds.size() / 2]) << ","
         << (bits.empty() ? 0 : bits[bits.size() / 2]) << ","
         << (cell_pass ? 1 : 0) << "\n";
      csv += os.str();
      all_pass = all_pass && cell_pass;
    }
  if (opt.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream cf(opt.out);
    cf << csv;
    std::cout << "wrote " << opt.out << "\n";
  }
  return all_pass ? 0 : 2;
}

int cmd_verify(const std::string& graph_file, const std::string& result_file) {
  std::ifstream jf(result_file);
  if (!jf) throw std::runtime_error("cannot read " + result_file);
  json detail = json::parse(jf);
  uint64_t id_seed = detail["graph"].value("id_seed", 1);
  Graph g = load_graph(graph_file, id_seed);
  std::vector<int> set;
  for (auto& v : detail["set"]) set.push_back(v.get<int>());
  int k = detail.value("k", 1);
  bool ok = true;
  for (auto& check : detail["checks"]) {
    std::string type = check["type"];
    bool pass = false;
    if (type == "ruling_set") {
      pass = check_ruling_set(g, set, check["alpha"].get<int>(),
                              std::max(1, check["beta"].get<int>()))
                 .pass;
    } else if (type == "mis") {
      pass = check_mis(g, set);
    } else if (type == "mis_of_power") {
      pass = check_mis(power_graph(g, k), set);
    } else if (type == "degree_cap") {
      pass = check_degree_cap(g, set, k, check["cap"].get<int>()).pass;
    } else if (type == "domination") {
      pass = check_ruling_set(g, set, 1, check["beta"].get<int>()).dominating;
    } else {
      pass = true;  // informational entries
    }
    std::cout << (pass ? "PASS " : "FAIL ") << type << "\n";
    ok = ok && pass;
  }
  return ok ? 0 : 2;
}

}  // namespace
}  // namespace psim

int main(int argc, char** argv) {
  CLI::App app{"CONGEST power-graph symmetry-breaking experiments"};
  app.require_subcommand(1);
  psim::Options opt;

  auto add_graph_flags = [&](CLI::App* c) {
    c->add_option("--graph", opt.graph_file, "edge-list file (header: n m)");
    c->add_option("--kind", opt.kind, "path|cycle|grid|gnp|regular");
    c->add_option("--n", opt.n, "vertex count");
    c->add_option("--p", opt.p, "gnp edge probability");
    c->add_option("--d", opt.d, "regular degree");
    c->add_option("--rows", opt.rows, "grid rows");
    c->add_option("--cols", opt.cols, "grid cols");
    c->add_option("--gen-seed", opt.gen_seed, "generator seed");
    c->add_option("--id-seed", opt.id_seed, "ID permutation seed");
  };

  auto* gen = app.add_subcommand("generate", "emit a graph file");
  add_graph_flags(gen);
  gen->add_option("--out", opt.out, "output file (stdout if omitted)");

  auto* run = app.add_subcommand("run", "run a pipeline across seeds");
  add_graph_flags(run);
  run->add_option("--algo", opt.algo,
                  "sparsify_power|sparsify_nd|k_ruling_set|awerbuch|"
                  "beta_ruling_set|luby|mis_gk|mis_shattering_one|"
                  "mis_shattering_two|kp12");
  run->add_option("--k", opt.k, "power-graph exponent");
  run->add_option("--beta", opt.beta, "ruling-set domination parameter");
  run->add_option("--f", opt.f, "kp12 ramp parameter");
  run->add_option("--profile", opt.profile, "paper|desk");
  run->add_option("--seeds", opt.seeds, "e.g. 1,2,3 or 1..5");
  run->add_option("--bandwidth", opt.bandwidth, "bits per edge per round");
  run->add_option("--c-pre", opt.c_pre, "pre-shattering step constant");
  run->add_option("--out", opt.out, "output prefix (stdout CSV if omitted)");

  std::string ns_spec = "64", ks_spec = "1";
  auto* sweep = app.add_subcommand("sweep", "cartesian parameter sweep");
  add_graph_flags(sweep);
  sweep->add_option("--algo", opt.algo, "algorithm (as in run)");
  sweep->add_option("--ns", ns_spec, "vertex counts, e.g. 64,128,256");
  sweep->add_option("--ks", ks_spec, "power exponents, e.g. 1,2");
  sweep->add_option("--profile", opt.profile, "paper|desk");
  sweep->add_option("--seeds", opt.seeds, "seeds per cell");
  sweep->add_option("--bandwidth", opt.bandwidth, "bits per edge per round");
  sweep->add_option("--c-pre", opt.c_pre, "pre-shattering step constant");
  sweep->add_option("--out", opt.out, "output CSV path");

  std::string result_file;
  auto* verify = app.add_subcommand("verify", "re-check a result JSON");
  verify->add_option("--graph", opt.graph_file, "edge-list file")->required();
  verify->add_option("--result", result_file, "result JSON")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return psim::cmd_generate(opt);
    if (run->parsed()) {
      if (opt.k < 1) throw CLI::ValidationError("--k must be >= 1");
      return psim::cmd_run(opt);
    }
    if (sweep->parsed()) return psim::cmd_sweep(opt, ns_spec, ks_spec);
    if (verify->parsed()) return psim::cmd_verify(opt.graph_file, result_file);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
