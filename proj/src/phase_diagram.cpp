#include "bethe/phase_diagram.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bethe/parallel.hpp"

namespace bethe {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::DelocalizedLyapunovCertified:
      return "delocalized_lyapunov";
    case PhaseLabel::LocalizedPhiCertified:
      return "localized_phi";
    case PhaseLabel::OutsideSpectrum:
      return "outside_spectrum";
    case PhaseLabel::Undetermined:
      return "undetermined";
  }
  return "?";
}

namespace {

json estimate_to_json(const CavityEstimate& e) {
  return json{{"value", e.value},
              {"std_error", e.std_error},
              {"n_effective", e.n_effective},
              {"eta", e.eta},
              {"heavy_tail", e.heavy_tail_warning},
              {"extrapolation_dominated", e.extrapolation_dominated}};
}

CavityEstimate estimate_from_json(const json& j) {
  CavityEstimate e;
  e.value = j.at("value").get<double>();
  e.std_error = j.at("std_error").get<double>();
  e.n_effective = j.at("n_effective").get<std::size_t>();
  e.eta = j.at("eta").get<double>();
  e.heavy_tail_warning = j.at("heavy_tail").get<bool>();
  e.extrapolation_dominated = j.at("extrapolation_dominated").get<bool>();
  return e;
}

json point_to_json(const PhasePoint& p) {
  json j{{"energy", p.energy},
         {"lambda", p.lambda},
         {"lyapunov", estimate_to_json(p.lyapunov)},
         {"dos", estimate_to_json(p.dos)},
         {"label", to_string(p.label)},
         {"margin_sigma", p.margin_sigma},
         {"diagnostics", p.diagnostics}};
  if (p.phi_at_one) j["phi_at_one"] = estimate_to_json(*p.phi_at_one);
  return j;
}

PhasePoint point_from_json(const json& j) {
  PhasePoint p;
  p.energy = j.at("energy").get<double>();
  p.lambda = j.at("lambda").get<double>();
  p.lyapunov = estimate_from_json(j.at("lyapunov"));
  p.dos = estimate_from_json(j.at("dos"));
  std::string label = j.at("label").get<std::string>();
  if (label == "delocalized_lyapunov") p.label = PhaseLabel::DelocalizedLyapunovCertified;
  else if (label == "localized_phi") p.label = PhaseLabel::LocalizedPhiCertified;
  else if (label == "outside_spectrum") p.label = PhaseLabel::OutsideSpectrum;
  else p.label = PhaseLabel::Undetermined;
  p.margin_sigma = j.at("margin_sigma").get<double>();
  p.diagnostics = j.at("diagnostics").get<std::string>();
  if (j.contains("phi_at_one")) p.phi_at_one = estimate_from_json(j.at("phi_at_one"));
  return p;
}

std::string cache_key(double E, double lambda, const ClassifyConfig& cfg) {
  std::ostringstream os;
  os << cfg.tree.branching << '|' << cfg.disorder.name() << '|' << cfg.mc.n_pool << '|'
     << cfg.mc.burn_in_sweeps << '|' << cfg.mc.measure_sweeps << '|' << cfg.mc.n_replicas
     << '|' << cfg.phi_path_length << '|' << cfg.run_phi_estimator << '|' << cfg.run_dos
     << '|' << cfg.certification_sigmas << '|' << cfg.seed;
  for (double eta : cfg.protocol.etas) os << '|' << eta;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "|%.17g|%.17g", lambda, E);
  os << buf;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : os.str()) h = mix64(h ^ static_cast<unsigned char>(c));
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

PhasePoint classify_point(double E, double lambda, const ClassifyConfig& cfg) {
  PhasePoint p;
  p.energy = E;
  p.lambda = lambda;
  const double logK = std::log(static_cast<double>(cfg.tree.branching));
  const double nsig = cfg.certification_sigmas;

  auto edges = spectrum_edges(cfg.tree, lambda, cfg.disorder);
  if (edges && !edges->contains(E)) {
    p.label = PhaseLabel::OutsideSpectrum;
    p.diagnostics = "outside almost-sure spectrum";
    return p;
  }

  RngHandle rng = derive(RngHandle::root(cfg.seed),
                         {std::bit_cast<std::uint64_t>(lambda), std::bit_cast<std::uint64_t>(E)});
  CavityParams params{cfg.tree, lambda, HalfPlanePoint(E, cfg.protocol.etas.front()),
                      cfg.disorder};

  try {
    p.lyapunov = estimate_lyapunov(params, cfg.protocol, cfg.mc, derive(rng, {1}));
    if (cfg.run_dos) p.dos = estimate_dos(params, cfg.protocol, cfg.mc, derive(rng, {2}));
  } catch (const ConvergenceError& e) {
    p.label = PhaseLabel::Undetermined;
    p.diagnostics = e.what();
    return p;
  }

  double se = std::max(p.lyapunov.std_error, 1e-12);
  double lyap_margin = (logK - p.lyapunov.value) / se;
  bool delocalized = p.lyapunov.value + nsig * p.lyapunov.std_error < logK;

  bool localized = false;
  double loc_margin = -1e9;
  if (lambda > 0.0) {
    double bound = min_log_moment_bound(cfg.disorder.sup_density(), lambda);
    if (bound < -logK) {
      localized = true;
      loc_margin = 99.0;
      p.diagnostics = "analytic C_s certificate";
    }
  }
  if (!localized && cfg.run_phi_estimator) {
    try {
      p.phi_at_one = estimate_phi_at_one(params, cfg.phi_path_length, cfg.protocol, cfg.mc,
                                         derive(rng, {3}));
      double pse = std::max(p.phi_at_one->std_error, 1e-12);
      loc_margin = (-logK - p.phi_at_one->value) / pse;
      localized = p.phi_at_one->value + nsig * p.phi_at_one->std_error < -logK;
    } catch (const ConvergenceError& e) {
      p.diagnostics = e.what();
    }
  }

  if (delocalized && localized) {
    // The 3-sigma certificates are mutually exclusive by convexity; both
    // firing means the estimates are inconsistent.
    p.label = PhaseLabel::Undetermined;
    p.diagnostics = "contradictory certificates";
    p.margin_sigma = 0.0;
  } else if (delocalized) {
    p.label = PhaseLabel::DelocalizedLyapunovCertified;
    p.margin_sigma = lyap_margin;
  } else if (localized) {
    p.label = PhaseLabel::LocalizedPhiCertified;
    p.margin_sigma = loc_margin;
  } else {
    p.label = PhaseLabel::Undetermined;
    p.margin_sigma = lyap_margin;
  }
  return p;
}

std::vector<PhasePoint> scan(const GridSpec& grid, const ScanConfig& cfg) {
  const std::size_t n = grid.lambdas.size() * grid.energies.size();
  std::vector<PhasePoint> out(n);
  if (!cfg.cache_dir.empty()) fs::create_directories(cfg.cache_dir);

  parallel_for(n, cfg.workers, [&](std::size_t i) {
    double lambda = grid.lambdas[i / grid.energies.size()];
    double E = grid.energies[i % grid.energies.size()];
    fs::path cache_file;
    if (!cfg.cache_dir.empty()) {
      cache_file = fs::path(cfg.cache_dir) / (cache_key(E, lambda, cfg.classify) + ".json");
      if (fs::exists(cache_file)) {
        std::ifstream in(cache_file);
        json j;
        in >> j;
        out[i] = point_from_json(j);
        return;
      }
    }
    out[i] = classify_point(E, lambda, cfg.classify);
    if (!cache_file.empty()) {
      // Atomic per-point write: temp file then rename.
      fs::path tmp = cache_file;
      tmp += ".tmp";
      {
        std::ofstream os(tmp);
        os << point_to_json(out[i]).dump(2) << "\n";
      }
      fs::rename(tmp, cache_file);
    }
  });
  return out;
}

std::vector<EdgePoint> edge_extract(const GridSpec& grid, TreeParams tree,
                                    const std::vector<PhasePoint>& points) {
  std::vector<EdgePoint> out;
  const std::size_t ne = grid.energies.size();
  const double logK = std::log(static_cast<double>(tree.branching));
  auto at = [&](std::size_t il, std::size_t ie) -> const PhasePoint& {
    return points[il * ne + ie];
  };
  auto interp = [&](std::size_t il, double t) {
    return grid.lambdas[il] + t * (grid.lambdas[il + 1] - grid.lambdas[il]);
  };

  for (std::size_t ie = 0; ie < ne; ++ie) {
    for (std::size_t il = 0; il + 1 < grid.lambdas.size(); ++il) {
      const PhasePoint& a = at(il, ie);
      const PhasePoint& b = at(il + 1, ie);
      if (a.label == PhaseLabel::OutsideSpectrum || b.label == PhaseLabel::OutsideSpectrum)
        continue;
      // Lyapunov margin log K - L.
      if (a.lyapunov.n_effective > 0 && b.lyapunov.n_effective > 0) {
        double ma = logK - a.lyapunov.value;
        double mb = logK - b.lyapunov.value;
        if ((ma > 0.0) != (mb > 0.0) && ma != mb)
          out.push_back({interp(il, ma / (ma - mb)), grid.energies[ie], "lyapunov"});
      }
      // Phi margin phi(1) + log K, where estimated on both sides.
      if (a.phi_at_one && b.phi_at_one) {
        double ma = a.phi_at_one->value + logK;
        double mb = b.phi_at_one->value + logK;
        if ((ma > 0.0) != (mb > 0.0) && ma != mb)
          out.push_back({interp(il, ma / (ma - mb)), grid.energies[ie], "phi"});
      }
    }
  }
  return out;
}

std::vector<ContinuityRow> continuity_check(Interval I, const std::vector<double>& lambdas,
                                            const ClassifyConfig& cfg, int n_nodes) {
  if (n_nodes < 3) throw ConfigError("continuity_check: need >= 3 nodes");
  if (n_nodes % 2 == 0) ++n_nodes;
  const double h = I.length() / (n_nodes - 1);

  auto simpson = [&](const std::vector<double>& f) {
    double s = f.front() + f.back();
    for (int i = 1; i + 1 < n_nodes; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    return s * h / 3.0;
  };

  std::vector<double> free_vals(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    double E = I.lo + i * h;
    try {
      free_vals[i] = lyapunov_exact_free(cfg.tree, HalfPlanePoint(E, 0.0));
    } catch (const std::domain_error&) {
      free_vals[i] = lyapunov_exact_free(cfg.tree, HalfPlanePoint(E + 1e-9, 0.0));
    }
  }
  double integral_free = simpson(free_vals);

  std::vector<ContinuityRow> out;
  for (double lambda : lambdas) {
    std::vector<double> vals(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      double E = I.lo + i * h;
      if (lambda == 0.0) {
        vals[i] = free_vals[i];
        continue;
      }
      RngHandle rng = derive(RngHandle::root(cfg.seed),
                             {std::bit_cast<std::uint64_t>(lambda),
                              std::bit_cast<std::uint64_t>(E), 7});
      CavityParams params{cfg.tree, lambda, HalfPlanePoint(E, cfg.protocol.etas.front()),
                          cfg.disorder};
      vals[i] = estimate_lyapunov(params, cfg.protocol, cfg.mc, rng).value;
    }
    ContinuityRow row;
    row.lambda = lambda;
    row.integral = simpson(vals);
    row.integral_free = integral_free;
    row.difference = std::abs(row.integral - integral_free);
    out.push_back(row);
  }
  return out;
}

}  // namespace bethe
