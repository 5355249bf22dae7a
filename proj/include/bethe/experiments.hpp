#pragma once

#include <string>
#include <vector>

#include "bethe/cavity.hpp"
#include "bethe/finite_graph.hpp"

namespace bethe {

// Many-realization wrappers around the finite-graph probes.

struct ResonanceConfig {
  TreeParams tree{2};
  int depth = 10;
  double lambda = 0.3;
  DisorderSpec disorder = DisorderSpec::cauchy();
  double energy = 2.9;
  double eta = 1e-6;
  std::vector<double> deltas{0.01, 0.02, 0.05};
  std::vector<int> radii{6, 8, 10};
  int n_realizations = 1000;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct ResonanceRow {
  double delta = 0.0;
  int radius = 0;
  double mean_count = 0.0;       // E[N_R]
  double p_at_least_one = 0.0;   // P(N_R >= 1)
  double se_p = 0.0;
};

std::vector<ResonanceRow> resonance_scan(const ResonanceConfig& cfg);

struct ImPropagationConfig {
  TreeParams tree{2};
  int depth = 8;
  double lambda = 1.0;
  DisorderSpec disorder = DisorderSpec::uniform();
  HalfPlanePoint z{0.3, 0.01};
  std::vector<int> radii{2, 4, 6};
  int n_realizations = 1000;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct ImPropagationReport {
  long n_checked = 0;
  long n_violations = 0;          // lhs < rhs - tolerance
  double worst_deficit = 0.0;     // max(rhs - lhs), negative when always slack
  double tolerance = 1e-12;
};

ImPropagationReport im_propagation_scan(const ImPropagationConfig& cfg);

struct TimeEvolutionConfig {
  TreeParams tree{2};
  int depth = 6;
  TreeFlavor flavor = TreeFlavor::Ball;
  double lambda = 0.0;
  DisorderSpec disorder = DisorderSpec::uniform();
  Interval energy_window{-1e9, 1e9};
  std::vector<double> times;
  int n_realizations = 10;
  std::uint64_t seed = 1;
  int workers = 0;
};

// Ensemble-averaged second moment per time.
std::vector<double> second_moment_ensemble(const TimeEvolutionConfig& cfg);

// Ensemble-averaged sphere-summed sup_t profile per radius, plus the
// log-linear localization-length fit.
struct DynLocProfile {
  std::vector<int> radii;
  std::vector<double> profile;
  double xi = 0.0;        // fitted localization length (1/|slope|)
  double r_squared = 0.0; // quality of the log-linear fit
};

DynLocProfile dynloc_profile_ensemble(const TimeEvolutionConfig& cfg,
                                      const std::vector<int>& radii,
                                      double t_max = 200.0, double t_step = 0.5);

// Power-law fit of the second moment: m2(t) ~ C t^{2 alpha} over the fit
// window (times with 0 < t_lo <= t <= t_hi).
double fit_transport_exponent(const std::vector<double>& times,
                              const std::vector<double>& m2, double t_lo, double t_hi);

}  // namespace bethe
