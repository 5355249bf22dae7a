#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "bethe/disorder.hpp"
#include "bethe/exact_forms.hpp"
#include "bethe/rng.hpp"
#include "bethe/types.hpp"

namespace bethe {

// Population-dynamics solver for the self-consistency recursion
//   Gamma(x) = 1 / (lambda w(x) - z - sum_{y > x} Gamma(y))
// and the Monte Carlo estimators built on the equilibrated pool.

struct CavityParams {
  TreeParams tree;
  double lambda = 0.0;
  HalfPlanePoint z;
  DisorderSpec disorder = DisorderSpec::cauchy();
};

struct McBudget {
  std::size_t n_pool = 100000;
  int burn_in_sweeps = 200;
  int measure_sweeps = 100;
  int n_batches = 10;
  // Path-sampling knobs (free energy / second moments).
  std::size_t n_replicas = 8192;
  int n_groups = 16;  // median-of-means groups
};

struct EtaProtocol {
  std::vector<double> etas{1e-1, 1e-2, 1e-3};  // decreasing
  // Linear-in-eta fit on the last two values; the step to eta = 0 is also
  // charged to the error bar as a systematic.
};

struct CavityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_effective = 0;
  double eta = 0.0;  // 0 after extrapolation
  bool heavy_tail_warning = false;
  bool extrapolation_dominated = false;
  // Per-eta trace (eta, value, std_error) for diagnostics and manifests.
  std::vector<std::array<double, 3>> trace;
};

class CavityPool {
 public:
  // Pool of truncated-Green-function samples; initial values are single-site
  // resolvents 1/(lambda w - z).  Requires z.eta > 0 and n_pool >= 1000.
  CavityPool(CavityParams params, std::size_t n_pool, RngHandle rng);

  // n_sweeps * n_pool random-slot replacements.
  void sweep(int n_sweeps);

  // Moves to a new spectral point, keeping the samples as warm start.
  void set_z(HalfPlanePoint z);

  const std::vector<Complex>& samples() const { return samples_; }
  const CavityParams& params() const { return params_; }
  long sweep_count() const { return sweep_count_; }
  Stream& rng() { return rng_; }

  double min_im() const;
  double max_abs() const;
  Complex mean() const;
  double mean_minus_log_abs() const;

  // One new cavity sample from K pool draws and a fresh potential.
  Complex draw_new(Stream& rng) const;
  Complex draw_from_pool(Stream& rng) const { return samples_[rng.index(samples_.size())]; }

 private:
  CavityParams params_;
  std::vector<Complex> samples_;
  long sweep_count_ = 0;
  Stream rng_;
};

// -E[log |Gamma|], eta-extrapolated per protocol.
CavityEstimate estimate_lyapunov(const CavityParams& params, const EtaProtocol& protocol,
                                 const McBudget& mc, RngHandle rng);

// Free energy phi(s; z) from path sampling at fixed s in (0,1), path length R.
CavityEstimate estimate_free_energy(const CavityParams& params, double s, int path_length,
                                    const EtaProtocol& protocol, const McBudget& mc,
                                    RngHandle rng);

// s -> 1 extrapolation of phi over s in {0.7, 0.8, 0.9, 0.95} (linear fit of
// the last three points).
CavityEstimate estimate_phi_at_one(const CavityParams& params, int path_length,
                                   const EtaProtocol& protocol, const McBudget& mc,
                                   RngHandle rng);

// Density of states E[Im G(0,0)] / pi with eta extrapolation.
CavityEstimate estimate_dos(const CavityParams& params, const EtaProtocol& protocol,
                            const McBudget& mc, RngHandle rng);

struct IdsOptions {
  double lower_cutoff = 0.0;  // 0 -> automatic from spectrum edges
  int n_points = 65;          // quadrature nodes (>= 5, odd preferred)
};

// Integrated density of states: quadrature of estimate_dos up to E.
// Exploratory output; carries an accuracy warning flag instead of a tolerance.
struct IdsEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool accuracy_warning = false;
};
IdsEstimate estimate_ids(const CavityParams& params, double E, const EtaProtocol& protocol,
                         const McBudget& mc, const IdsOptions& opts, RngHandle rng);

// Path-sampled E[|G(0,x; z)|^2] at the requested distances, fixed eta.
std::vector<CavityEstimate> estimate_greens_second_moment(
    const CavityParams& params, const std::vector<int>& distances, const McBudget& mc,
    RngHandle rng);

// Shared helpers.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double se_intercept = 0.0;
  double se_slope = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
LinearFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& se);

}  // namespace bethe
