// bethelab: command-line laboratory for the Anderson model on the Bethe
// lattice.  Every subcommand reads an optional JSON config file, applies flag
// overrides (flags win), writes CSV outputs at full decimal precision and a
// manifest echoing the fully resolved configuration.
//
// Exit codes: 0 ok, 2 invalid configuration, 3 convergence failure (partial
// CSV retained), 4 resource cap exceeded.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bethe/cavity.hpp"
#include "bethe/csv.hpp"
#include "bethe/exact_forms.hpp"
#include "bethe/experiments.hpp"
#include "bethe/parallel.hpp"
#include "bethe/phase_diagram.hpp"
#include "bethe/spectral_stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bethe;

namespace {

// ---------------------------------------------------------------------------
// Shared option plumbing.

std::vector<double> parse_grid(const std::string& text) {
  // "lo:hi:step", "a,b,c", or a single value.
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream is(text);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' ||
        !(step > 0.0) || hi < lo)
      throw ConfigError("bad grid '" + text + "' (want lo:hi:step, step > 0)");
    // Count-based iteration keeps the endpoint exact.
    int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) out.push_back(lo + i * step);
    return out;
  }
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw ConfigError("empty grid '" + text + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_grid(text)) out.push_back(static_cast<int>(std::lround(v)));
  return out;
}

struct CommonOpts {
  int K = 2;
  std::string disorder = "cauchy";
  std::string tabulated_csv;
  double moment_order = 1.0;
  double lambda = 0.0;
  std::string E_grid = "0";
  std::string etas = "0.1,0.01,0.001";
  std::size_t n_pool = 100000;
  int burn_in = 200;
  int measure = 100;
  std::size_t n_replicas = 8192;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out_dir = ".";
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "JSON config file (flags override)");
  cmd->add_option("--K", o.K, "branching number");
  cmd->add_option("--disorder", o.disorder, "cauchy|gaussian|uniform|tabulated");
  cmd->add_option("--tabulated-csv", o.tabulated_csv, "density CSV for tabulated disorder");
  cmd->add_option("--moment-order", o.moment_order, "declared moment order for tabulated");
  cmd->add_option("--lambda", o.lambda, "disorder strength");
  cmd->add_option("--E-grid", o.E_grid, "energies: lo:hi:step, list, or value");
  cmd->add_option("--etas", o.etas, "decreasing eta protocol");
  cmd->add_option("--pool", o.n_pool, "population size");
  cmd->add_option("--burn-in", o.burn_in, "burn-in sweeps per eta");
  cmd->add_option("--measure", o.measure, "measurement sweeps per eta");
  cmd->add_option("--replicas", o.n_replicas, "path-sampling replicas");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--workers", o.workers, "worker threads (0 = auto)");
  cmd->add_option("--out-dir", o.out_dir, "output directory");
}

// Config-file override: any key present in the file replaces the default,
// then CLI11 re-applies explicitly passed flags on top.
void merge_config(const CLI::App* cmd, CommonOpts& o) {
  if (o.config_file.empty()) return;
  std::ifstream in(o.config_file);
  if (!in) throw ConfigError("cannot read config file: " + o.config_file);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config file parse error: ") + e.what());
  }
  auto passed = [&](const std::string& flag) {
    auto* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  auto get = [&](const char* key, const char* flag, auto& slot) {
    if (j.contains(key) && !passed(flag)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("K", "--K", o.K);
  get("disorder", "--disorder", o.disorder);
  get("tabulated_csv", "--tabulated-csv", o.tabulated_csv);
  get("moment_order", "--moment-order", o.moment_order);
  get("lambda", "--lambda", o.lambda);
  get("E_grid", "--E-grid", o.E_grid);
  get("etas", "--etas", o.etas);
  get("pool", "--pool", o.n_pool);
  get("burn_in", "--burn-in", o.burn_in);
  get("measure", "--measure", o.measure);
  get("replicas", "--replicas", o.n_replicas);
  get("seed", "--seed", o.seed);
  get("workers", "--workers", o.workers);
  get("out_dir", "--out-dir", o.out_dir);
}

DisorderSpec make_disorder(const CommonOpts& o) {
  if (o.disorder == "cauchy") return DisorderSpec::cauchy();
  if (o.disorder == "gaussian") return DisorderSpec::gaussian();
  if (o.disorder == "uniform") return DisorderSpec::uniform();
  if (o.disorder == "tabulated") {
    if (o.tabulated_csv.empty())
      throw ConfigError("tabulated disorder needs --tabulated-csv");
    return DisorderSpec::tabulated_from_csv(o.tabulated_csv, o.moment_order);
  }
  throw ConfigError("unknown disorder kind: " + o.disorder);
}

EtaProtocol make_protocol(const CommonOpts& o) {
  EtaProtocol p;
  p.etas = parse_grid(o.etas);
  return p;
}

McBudget make_budget(const CommonOpts& o) {
  McBudget mc;
  mc.n_pool = o.n_pool;
  mc.burn_in_sweeps = o.burn_in;
  mc.measure_sweeps = o.measure;
  mc.n_replicas = o.n_replicas;
  return mc;
}

json resolved_json(const CommonOpts& o) {
  return json{{"K", o.K},
              {"disorder", o.disorder},
              {"tabulated_csv", o.tabulated_csv},
              {"moment_order", o.moment_order},
              {"lambda", o.lambda},
              {"E_grid", o.E_grid},
              {"etas", o.etas},
              {"pool", o.n_pool},
              {"burn_in", o.burn_in},
              {"measure", o.measure},
              {"replicas", o.n_replicas},
              {"seed", o.seed},
              {"workers", o.workers},
              {"out_dir", o.out_dir}};
}

std::string out_path(const CommonOpts& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return (fs::path(o.out_dir) / name).string();
}

// Cavity-estimate CSV schema shared by lyapunov / free-energy / dos.
const std::vector<std::string> kCavityColumns = {
    "K",     "lambda",    "E",      "eta",    "observable",
    "value", "std_error", "n_pool", "sweeps", "seed"};

void cavity_row(CsvWriter& w, const CommonOpts& o, double E, const std::string& obs,
                const CavityEstimate& e) {
  w.field(o.K)
      .field(o.lambda)
      .field(E)
      .field(e.eta)
      .field(obs)
      .field(e.value)
      .field(e.std_error)
      .field(o.n_pool)
      .field(long(o.burn_in) + o.measure)
      .field(o.seed);
  w.end_row();
}

// Grid-point tasks run in parallel; each point owns the stream derived from
// its logical index, so output bytes are independent of scheduling.
template <class Fn>
std::vector<CavityEstimate> over_grid(const std::vector<double>& Es, int workers, Fn&& fn) {
  std::vector<CavityEstimate> out(Es.size());
  std::vector<std::string> errors(Es.size());
  parallel_for(Es.size(), workers, [&](std::size_t i) { out[i] = fn(Es[i], i); });
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_lyapunov(const CLI::App* cmd, CommonOpts& o) {
  merge_config(cmd, o);
  std::vector<double> Es = parse_grid(o.E_grid);
  DisorderSpec dis = make_disorder(o);
  EtaProtocol prot = make_protocol(o);
  McBudget mc = make_budget(o);
  RngHandle master = RngHandle::root(o.seed);

  std::string csv = out_path(o, "lyapunov.csv");
  CsvWriter w(csv, kCavityColumns);
  int exit_code = 0;
  std::vector<CavityEstimate> ests(Es.size());
  std::vector<std::string> errs(Es.size());
  parallel_for(Es.size(), o.workers, [&](std::size_t i) {
    try {
      CavityParams p{TreeParams(o.K), o.lambda,
                     HalfPlanePoint(Es[i], prot.etas.front()), dis};
      ests[i] = estimate_lyapunov(p, prot, mc, derive(master, {i}));
    } catch (const ConvergenceError& e) {
      errs[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < Es.size(); ++i) {
    if (!errs[i].empty()) {
      std::cerr << "convergence failure at E=" << Es[i] << ": " << errs[i] << "\n";
      exit_code = 3;
      continue;
    }
    cavity_row(w, o, Es[i], "lyapunov", ests[i]);
  }
  write_manifest(out_path(o, "lyapunov.manifest.json"), "lyapunov", resolved_json(o),
                 {csv});
  return exit_code;
}

int cmd_free_energy(const CLI::App* cmd, CommonOpts& o, double s, int path_length,
                    bool at_one) {
  merge_config(cmd, o);
  std::vector<double> Es = parse_grid(o.E_grid);
  DisorderSpec dis = make_disorder(o);
  EtaProtocol prot = make_protocol(o);
  McBudget mc = make_budget(o);
  RngHandle master = RngHandle::root(o.seed);

  std::string csv = out_path(o, "free_energy.csv");
  CsvWriter w(csv, kCavityColumns);
  int exit_code = 0;
  std::vector<CavityEstimate> ests(Es.size());
  std::vector<std::string> errs(Es.size());
  parallel_for(Es.size(), o.workers, [&](std::size_t i) {
    try {
      CavityParams p{TreeParams(o.K), o.lambda,
                     HalfPlanePoint(Es[i], prot.etas.front()), dis};
      ests[i] = at_one ? estimate_phi_at_one(p, path_length, prot, mc, derive(master, {i}))
                       : estimate_free_energy(p, s, path_length, prot, mc,
                                              derive(master, {i}));
    } catch (const ConvergenceError& e) {
      errs[i] = e.what();
    }
  });
  char obs[64];
  if (at_one)
    std::snprintf(obs, sizeof(obs), "phi_at_one");
  else
    std::snprintf(obs, sizeof(obs), "phi(s=%g)", s);
  for (std::size_t i = 0; i < Es.size(); ++i) {
    if (!errs[i].empty()) {
      std::cerr << "convergence failure at E=" << Es[i] << ": " << errs[i] << "\n";
      exit_code = 3;
      continue;
    }
    cavity_row(w, o, Es[i], obs, ests[i]);
  }
  json cfg = resolved_json(o);
  cfg["s"] = s;
  cfg["path_length"] = path_length;
  cfg["at_one"] = at_one;
  write_manifest(out_path(o, "free_energy.manifest.json"), "free-energy", cfg, {csv});
  return exit_code;
}

int cmd_dos(const CLI::App* cmd, CommonOpts& o, bool ids) {
  merge_config(cmd, o);
  std::vector<double> Es = parse_grid(o.E_grid);
  DisorderSpec dis = make_disorder(o);
  EtaProtocol prot = make_protocol(o);
  McBudget mc = make_budget(o);
  RngHandle master = RngHandle::root(o.seed);

  std::string csv = out_path(o, ids ? "ids.csv" : "dos.csv");
  CsvWriter w(csv, kCavityColumns);
  int exit_code = 0;
  std::vector<CavityEstimate> ests(Es.size());
  std::vector<std::string> errs(Es.size());
  parallel_for(Es.size(), o.workers, [&](std::size_t i) {
    try {
      CavityParams p{TreeParams(o.K), o.lambda,
                     HalfPlanePoint(Es[i], prot.etas.front()), dis};
      if (ids) {
        IdsEstimate e = estimate_ids(p, Es[i], prot, mc, IdsOptions{}, derive(master, {i}));
        ests[i].value = e.value;
        ests[i].std_error = e.std_error;
        ests[i].heavy_tail_warning = e.accuracy_warning;
      } else {
        ests[i] = estimate_dos(p, prot, mc, derive(master, {i}));
      }
    } catch (const ConvergenceError& e) {
      errs[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < Es.size(); ++i) {
    if (!errs[i].empty()) {
      std::cerr << "convergence failure at E=" << Es[i] << ": " << errs[i] << "\n";
      exit_code = 3;
      continue;
    }
    cavity_row(w, o, Es[i], ids ? "ids" : "dos", ests[i]);
  }
  write_manifest(out_path(o, ids ? "ids.manifest.json" : "dos.manifest.json"), "dos",
                 resolved_json(o), {csv});
  return exit_code;
}

int cmd_thresholds(const CLI::App* cmd, CommonOpts& o) {
  merge_config(cmd, o);
  DisorderSpec dis = make_disorder(o);
  LambdaThresholds th = lambda_thresholds(TreeParams(o.K), dis);
  auto edges = spectrum_edges(TreeParams(o.K), o.lambda, dis);
  json j{{"K", o.K},
         {"disorder", o.disorder},
         {"lambda", o.lambda},
         {"lambda_min", th.lambda_min},
         {"lambda_c_upper", th.lambda_c_upper}};
  if (th.lambda_c_lower) j["lambda_c_lower"] = *th.lambda_c_lower;
  if (edges)
    j["spectrum"] = json{{"lo", edges->lo}, {"hi", edges->hi}};
  else
    j["spectrum"] = "all reals";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_phase_scan(const CLI::App* cmd, CommonOpts& o, const std::string& lambda_grid,
                   bool run_phi, int phi_path_length, const std::string& cache_dir) {
  merge_config(cmd, o);
  GridSpec grid;
  grid.lambdas = parse_grid(lambda_grid);
  grid.energies = parse_grid(o.E_grid);

  ScanConfig sc;
  sc.classify.tree = TreeParams(o.K);
  sc.classify.disorder = make_disorder(o);
  sc.classify.mc = make_budget(o);
  sc.classify.protocol = make_protocol(o);
  sc.classify.run_phi_estimator = run_phi;
  sc.classify.phi_path_length = phi_path_length;
  sc.classify.seed = o.seed;
  sc.cache_dir = cache_dir;
  sc.workers = o.workers;

  std::vector<PhasePoint> points = scan(grid, sc);

  std::string grid_csv = out_path(o, "phase_grid.csv");
  {
    CsvWriter w(grid_csv, {"K", "lambda", "E", "L_value", "L_se", "phi1_value",
                           "phi1_se", "dos_value", "dos_se", "label", "margin_sigma"});
    for (const PhasePoint& p : points) {
      w.field(o.K)
          .field(p.lambda)
          .field(p.energy)
          .field(p.lyapunov.value)
          .field(p.lyapunov.std_error)
          .field(p.phi_at_one ? p.phi_at_one->value : 0.0)
          .field(p.phi_at_one ? p.phi_at_one->std_error : -1.0)
          .field(p.dos.value)
          .field(p.dos.std_error)
          .field(to_string(p.label))
          .field(p.margin_sigma);
      w.end_row();
    }
  }
  std::string edge_csv = out_path(o, "phase_edge.csv");
  {
    CsvWriter w(edge_csv, {"lambda", "E_edge", "criterion"});
    for (const EdgePoint& e : edge_extract(grid, TreeParams(o.K), points)) {
      w.field(e.lambda).field(e.energy).field(e.criterion);
      w.end_row();
    }
  }
  json cfg = resolved_json(o);
  cfg["lambda_grid"] = lambda_grid;
  cfg["run_phi"] = run_phi;
  cfg["phi_path_length"] = phi_path_length;
  cfg["cache_dir"] = cache_dir;
  write_manifest(out_path(o, "phase_scan.manifest.json"), "phase-scan", cfg,
                 {grid_csv, edge_csv});
  return 0;
}

int cmd_spectral_stats(const CLI::App* cmd, CommonOpts& o, const std::string& mode,
                       int depth, int n_vertices, int n_realizations,
                       const std::string& centers, bool compute_pr, bool histogram) {
  merge_config(cmd, o);
  json cfg = resolved_json(o);
  cfg["mode"] = mode;
  cfg["n_realizations"] = n_realizations;
  std::string csv = out_path(o, "spectral_stats.csv");
  CsvWriter w(csv, {"K", "lambda", "E", "size", "n_realizations", "mean_r", "se_r",
                    "tv_poisson", "tv_goe", "median_pr_fraction", "seed"});

  if (mode == "tree") {
    PoissonTestConfig pc;
    pc.tree = TreeParams(o.K);
    pc.depth = depth;
    pc.lambda = o.lambda;
    pc.disorder = make_disorder(o);
    pc.centers = parse_grid(centers);
    pc.n_realizations = n_realizations;
    pc.seed = o.seed;
    pc.workers = o.workers;
    cfg["depth"] = depth;
    cfg["centers"] = centers;
    for (const CenterReport& r : poisson_test_truncated_tree(pc)) {
      w.field(o.K)
          .field(o.lambda)
          .field(r.center_energy)
          .field(depth)
          .field(n_realizations)
          .field(r.gaps.mean_gap_ratio)
          .field(r.gaps.std_error)
          .field(r.tv_poisson)
          .field(-1.0)
          .field(-1.0)
          .field(o.seed);
      w.end_row();
    }
  } else if (mode == "rrg") {
    RrgScanConfig rc;
    rc.tree = TreeParams(o.K);
    rc.n_vertices = n_vertices;
    rc.points.push_back({o.lambda, make_disorder(o)});
    rc.n_realizations = n_realizations;
    rc.compute_pr = compute_pr;
    rc.seed = o.seed;
    rc.workers = o.workers;
    cfg["n_vertices"] = n_vertices;
    cfg["compute_pr"] = compute_pr;
    for (const RrgPointReport& r : rrg_statistics_scan(rc)) {
      w.field(o.K)
          .field(r.lambda)
          .field(0.0)
          .field(n_vertices)
          .field(n_realizations)
          .field(r.gaps.mean_gap_ratio)
          .field(r.gaps.std_error)
          .field(r.tv_poisson)
          .field(r.tv_goe)
          .field(r.median_pr_fraction)
          .field(o.seed);
      w.end_row();
    }
  } else {
    throw ConfigError("spectral-stats mode must be tree or rrg");
  }
  (void)histogram;
  write_manifest(out_path(o, "spectral_stats.manifest.json"), "spectral-stats", cfg,
                 {csv});
  return 0;
}

int cmd_transport(const CLI::App* cmd, CommonOpts& o, const std::string& mode,
                  const std::string& distances, double eta, int depth,
                  int n_realizations, const std::string& times) {
  merge_config(cmd, o);
  json cfg = resolved_json(o);
  cfg["mode"] = mode;
  double E = parse_grid(o.E_grid).front();

  std::string csv = out_path(o, "transport.csv");
  if (mode == "greens") {
    CavityParams p{TreeParams(o.K), o.lambda, HalfPlanePoint(E, eta), make_disorder(o)};
    McBudget mc = make_budget(o);
    std::vector<int> ds = parse_int_list(distances);
    auto ests = estimate_greens_second_moment(p, ds, mc, RngHandle::root(o.seed));
    CsvWriter w(csv, {"K", "lambda", "E", "eta", "distance", "value", "std_error",
                      "n_replicas", "seed"});
    for (std::size_t i = 0; i < ds.size(); ++i) {
      w.field(o.K)
          .field(o.lambda)
          .field(E)
          .field(eta)
          .field(ds[i])
          .field(ests[i].value)
          .field(ests[i].std_error)
          .field(o.n_replicas)
          .field(o.seed);
      w.end_row();
    }
    cfg["distances"] = distances;
    cfg["eta"] = eta;
  } else if (mode == "evolve") {
    TimeEvolutionConfig tc;
    tc.tree = TreeParams(o.K);
    tc.depth = depth;
    tc.lambda = o.lambda;
    tc.disorder = make_disorder(o);
    tc.times = parse_grid(times);
    tc.n_realizations = n_realizations;
    tc.seed = o.seed;
    tc.workers = o.workers;
    std::vector<double> m2 = second_moment_ensemble(tc);
    CsvWriter w(csv, {"K", "lambda", "t", "m2", "n_realizations", "seed"});
    for (std::size_t i = 0; i < tc.times.size(); ++i) {
      w.field(o.K).field(o.lambda).field(tc.times[i]).field(m2[i]).field(n_realizations).field(o.seed);
      w.end_row();
    }
    cfg["depth"] = depth;
    cfg["times"] = times;
    cfg["n_realizations"] = n_realizations;
  } else {
    throw ConfigError("transport mode must be greens or evolve");
  }
  write_manifest(out_path(o, "transport.manifest.json"), "transport", cfg, {csv});
  return 0;
}

int cmd_resonance(const CLI::App* cmd, CommonOpts& o, int depth, double eta,
                  const std::string& deltas, const std::string& radii,
                  int n_realizations) {
  merge_config(cmd, o);
  ResonanceConfig rc;
  rc.tree = TreeParams(o.K);
  rc.depth = depth;
  rc.lambda = o.lambda;
  rc.disorder = make_disorder(o);
  rc.energy = parse_grid(o.E_grid).front();
  rc.eta = eta;
  rc.deltas = parse_grid(deltas);
  rc.radii = parse_int_list(radii);
  rc.n_realizations = n_realizations;
  rc.seed = o.seed;
  rc.workers = o.workers;

  std::string csv = out_path(o, "resonance.csv");
  CsvWriter w(csv, {"K", "lambda", "E", "eta", "delta", "R", "mean_count",
                    "p_at_least_one", "se_p", "n_realizations", "seed"});
  for (const ResonanceRow& r : resonance_scan(rc)) {
    w.field(o.K)
        .field(o.lambda)
        .field(rc.energy)
        .field(eta)
        .field(r.delta)
        .field(r.radius)
        .field(r.mean_count)
        .field(r.p_at_least_one)
        .field(r.se_p)
        .field(n_realizations)
        .field(o.seed);
    w.end_row();
  }
  json cfg = resolved_json(o);
  cfg["depth"] = depth;
  cfg["eta"] = eta;
  cfg["deltas"] = deltas;
  cfg["radii"] = radii;
  cfg["n_realizations"] = n_realizations;
  write_manifest(out_path(o, "resonance.manifest.json"), "resonance", cfg, {csv});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anderson model on the Bethe lattice: numerical laboratory"};
  app.require_subcommand(1);

  CommonOpts o;

  auto* lyap = app.add_subcommand("lyapunov", "Lyapunov exponent over an E grid");
  add_common(lyap, o);

  auto* fe = app.add_subcommand("free-energy", "free energy phi(s; E) over an E grid");
  add_common(fe, o);
  double s = 0.5;
  int path_length = 40;
  bool at_one = false;
  fe->add_option("--s", s, "fractional moment order in (0,1)");
  fe->add_option("--path-length", path_length, "path length R");
  fe->add_flag("--at-one", at_one, "extrapolate to s = 1");

  auto* dos = app.add_subcommand("dos", "density of states over an E grid");
  add_common(dos, o);
  bool ids = false;
  dos->add_flag("--ids", ids, "integrated density of states instead");

  auto* th = app.add_subcommand("thresholds", "closed-form lambda thresholds and spectrum");
  add_common(th, o);

  auto* ps = app.add_subcommand("phase-scan", "classify a (lambda, E) grid");
  add_common(ps, o);
  std::string lambda_grid = "0.5";
  bool run_phi = false;
  int phi_path_length = 40;
  std::string cache_dir;
  ps->add_option("--lambda-grid", lambda_grid, "lambda grid: lo:hi:step or list");
  ps->add_flag("--run-phi", run_phi, "run the phi(1) estimator when analytics fail");
  ps->add_option("--phi-path-length", phi_path_length, "phi path length");
  ps->add_option("--cache-dir", cache_dir, "per-point result cache");

  auto* ss = app.add_subcommand("spectral-stats", "gap statistics on T_L or RRGs");
  add_common(ss, o);
  std::string mode = "tree", centers = "0";
  int depth = 9, n_vertices = 2000, n_realizations = 200;
  bool compute_pr = false, histogram = false;
  ss->add_option("--mode", mode, "tree | rrg");
  ss->add_option("--depth", depth, "tree depth L");
  ss->add_option("--N", n_vertices, "RRG vertex count");
  ss->add_option("--realizations", n_realizations, "ensemble size");
  ss->add_option("--centers", centers, "tree mode: center energies");
  ss->add_flag("--pr", compute_pr, "compute participation ratios (rrg)");
  ss->add_flag("--histogram", histogram, "also dump spacing histograms");

  auto* tr = app.add_subcommand("transport", "Green-function moments / time evolution");
  add_common(tr, o);
  std::string tr_mode = "greens", distances = "4:16:2", times = "1:20:1";
  double tr_eta = 0.01;
  int tr_depth = 6, tr_realizations = 10;
  tr->add_option("--mode", tr_mode, "greens | evolve");
  tr->add_option("--distances", distances, "greens: distance list");
  tr->add_option("--eta", tr_eta, "greens: fixed eta > 0");
  tr->add_option("--depth", tr_depth, "evolve: tree depth");
  tr->add_option("--realizations", tr_realizations, "evolve: ensemble size");
  tr->add_option("--times", times, "evolve: time grid");

  auto* rs = app.add_subcommand("resonance", "sphere resonance counting on T_L");
  add_common(rs, o);
  int rs_depth = 10, rs_realizations = 1000;
  double rs_eta = 1e-6;
  std::string rs_deltas = "0.02", rs_radii = "6,8,10";
  rs->add_option("--depth", rs_depth, "tree depth L");
  rs->add_option("--eta", rs_eta, "spectral offset eta");
  rs->add_option("--deltas", rs_deltas, "resonance exponents");
  rs->add_option("--radii", rs_radii, "sphere radii");
  rs->add_option("--realizations", rs_realizations, "ensemble size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (lyap->parsed()) return cmd_lyapunov(lyap, o);
    if (fe->parsed()) return cmd_free_energy(fe, o, s, path_length, at_one);
    if (dos->parsed()) return cmd_dos(dos, o, ids);
    if (th->parsed()) return cmd_thresholds(th, o);
    if (ps->parsed())
      return cmd_phase_scan(ps, o, lambda_grid, run_phi, phi_path_length, cache_dir);
    if (ss->parsed())
      return cmd_spectral_stats(ss, o, mode, depth, n_vertices, n_realizations, centers,
                                compute_pr, histogram);
    if (tr->parsed())
      return cmd_transport(tr, o, tr_mode, distances, tr_eta, tr_depth, tr_realizations,
                           times);
    if (rs->parsed())
      return cmd_resonance(rs, o, rs_depth, rs_eta, rs_deltas, rs_radii, rs_realizations);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
