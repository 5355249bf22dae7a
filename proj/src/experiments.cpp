#include "bethe/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bethe/parallel.hpp"

namespace bethe {

std::vector<ResonanceRow> resonance_scan(const ResonanceConfig& cfg) {
  FiniteGraph g = build_truncated_tree(cfg.tree, cfg.depth, TreeFlavor::Rooted);
  for (int R : cfg.radii)
    if (R > cfg.depth) throw ConfigError("resonance_scan: radius exceeds depth");
  RngHandle master = RngHandle::root(cfg.seed);

  // counts[r][delta][radius]
  const std::size_t nd = cfg.deltas.size(), nr = cfg.radii.size();
  std::vector<std::vector<long>> counts(cfg.n_realizations,
                                        std::vector<long>(nd * nr, 0));

  parallel_for(cfg.n_realizations, cfg.workers, [&](std::size_t r) {
    DisorderRealization real =
        make_realization(g, cfg.disorder, cfg.lambda, derive(master, {0, r}));
    TreeResolvent res =
        exact_resolvent_root(g, real, HalfPlanePoint(cfg.energy, cfg.eta));
    for (std::size_t ri = 0; ri < nr; ++ri) {
      int R = cfg.radii[ri];
      for (std::size_t i = 0; i < g.n_vertices; ++i) {
        if (g.distance_from_root[i] != R) continue;
        double amp = std::abs(res.green0[i]);
        for (std::size_t di = 0; di < nd; ++di)
          if (amp >= std::exp(cfg.deltas[di] * R)) ++counts[r][di * nr + ri];
      }
    }
  });

  std::vector<ResonanceRow> out;
  for (std::size_t di = 0; di < nd; ++di) {
    for (std::size_t ri = 0; ri < nr; ++ri) {
      ResonanceRow row;
      row.delta = cfg.deltas[di];
      row.radius = cfg.radii[ri];
      long hits = 0;
      double sum = 0.0;
      for (int r = 0; r < cfg.n_realizations; ++r) {
        long c = counts[r][di * nr + ri];
        sum += static_cast<double>(c);
        if (c >= 1) ++hits;
      }
      double n = cfg.n_realizations;
      row.mean_count = sum / n;
      row.p_at_least_one = hits / n;
      row.se_p = std::sqrt(row.p_at_least_one * (1.0 - row.p_at_least_one) / n);
      out.push_back(row);
    }
  }
  return out;
}

ImPropagationReport im_propagation_scan(const ImPropagationConfig& cfg) {
  FiniteGraph g = build_truncated_tree(cfg.tree, cfg.depth, TreeFlavor::Rooted);
  RngHandle master = RngHandle::root(cfg.seed);
  ImPropagationReport rep;
  std::vector<double> deficits(cfg.n_realizations, -1e300);
  std::vector<long> violations(cfg.n_realizations, 0);

  parallel_for(cfg.n_realizations, cfg.workers, [&](std::size_t r) {
    DisorderRealization real =
        make_realization(g, cfg.disorder, cfg.lambda, derive(master, {0, r}));
    for (int R : cfg.radii) {
      ImPropagation ip = check_im_propagation(g, real, cfg.z, R);
      double deficit = ip.rhs - ip.lhs;
      deficits[r] = std::max(deficits[r], deficit);
      if (deficit > rep.tolerance) ++violations[r];
    }
  });

  rep.n_checked = static_cast<long>(cfg.n_realizations) * cfg.radii.size();
  rep.worst_deficit = *std::max_element(deficits.begin(), deficits.end());
  for (long v : violations) rep.n_violations += v;
  return rep;
}

std::vector<double> second_moment_ensemble(const TimeEvolutionConfig& cfg) {
  FiniteGraph g = build_truncated_tree(cfg.tree, cfg.depth, cfg.flavor);
  RngHandle master = RngHandle::root(cfg.seed);
  std::vector<std::vector<double>> per_real(cfg.n_realizations);

  parallel_for(cfg.n_realizations, cfg.workers, [&](std::size_t r) {
    DisorderRealization real =
        make_realization(g, cfg.disorder, cfg.lambda, derive(master, {0, r}));
    SpectralDecomposition d = diagonalize(assemble_hamiltonian(g, real));
    per_real[r] = evolve_second_moment(g, d, cfg.energy_window, cfg.times);
  });

  std::vector<double> mean(cfg.times.size(), 0.0);
  for (const auto& v : per_real)
    for (std::size_t t = 0; t < v.size(); ++t) mean[t] += v[t];
  for (double& m : mean) m /= cfg.n_realizations;
  return mean;
}

DynLocProfile dynloc_profile_ensemble(const TimeEvolutionConfig& cfg,
                                      const std::vector<int>& radii, double t_max,
                                      double t_step) {
  FiniteGraph g = build_truncated_tree(cfg.tree, cfg.depth, cfg.flavor);
  RngHandle master = RngHandle::root(cfg.seed);
  std::vector<std::vector<double>> per_real(cfg.n_realizations);

  parallel_for(cfg.n_realizations, cfg.workers, [&](std::size_t r) {
    DisorderRealization real =
        make_realization(g, cfg.disorder, cfg.lambda, derive(master, {0, r}));
    SpectralDecomposition d = diagonalize(assemble_hamiltonian(g, real));
    per_real[r] = dynamical_localization_profile(g, d, cfg.energy_window, radii,
                                                 t_max, t_step);
  });

  DynLocProfile out;
  out.radii = radii;
  out.profile.assign(radii.size(), 0.0);
  for (const auto& v : per_real)
    for (std::size_t i = 0; i < v.size(); ++i) out.profile[i] += v[i];
  for (double& p : out.profile) p /= cfg.n_realizations;

  // Log-linear fit of the profile.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (out.profile[i] > 0.0) {
      xs.push_back(radii[i]);
      ys.push_back(std::log(out.profile[i]));
    }
  if (xs.size() >= 2) {
    LinearFit f = fit_line(xs, ys);
    out.xi = f.slope < 0.0 ? -1.0 / f.slope : std::numeric_limits<double>::infinity();
    double mean_y = 0.0;
    for (double y : ys) mean_y += y;
    mean_y /= ys.size();
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double pred = f.intercept + f.slope * xs[i];
      ss_res += (ys[i] - pred) * (ys[i] - pred);
      ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
    }
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  }
  return out;
}

double fit_transport_exponent(const std::vector<double>& times,
                              const std::vector<double>& m2, double t_lo, double t_hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= t_lo && times[i] <= t_hi && m2[i] > 0.0) {
      xs.push_back(std::log(times[i]));
      ys.push_back(std::log(m2[i]));
    }
  if (xs.size() < 2) throw ConfigError("fit_transport_exponent: too few points in window");
  return 0.5 * fit_line(xs, ys).slope;  // m2 ~ t^{2 alpha}
}

}  // namespace bethe
