#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bethe/cavity.hpp"
#include "bethe/types.hpp"

namespace bethe {

enum class PhaseLabel {
  DelocalizedLyapunovCertified,
  LocalizedPhiCertified,
  OutsideSpectrum,
  Undetermined,
};

std::string to_string(PhaseLabel label);

struct PhasePoint {
  double energy = 0.0;
  double lambda = 0.0;
  CavityEstimate lyapunov;
  std::optional<CavityEstimate> phi_at_one;
  CavityEstimate dos;
  PhaseLabel label = PhaseLabel::Undetermined;
  double margin_sigma = 0.0;  // signed distance of the criterion to threshold
  std::string diagnostics;    // convergence failures, analytic certificates
};

struct ClassifyConfig {
  TreeParams tree{2};
  DisorderSpec disorder = DisorderSpec::cauchy();
  McBudget mc;
  EtaProtocol protocol;
  int phi_path_length = 40;
  bool run_phi_estimator = false;  // analytic C_s certificate is tried first
  bool run_dos = true;
  double certification_sigmas = 3.0;
  std::uint64_t seed = 1;
};

PhasePoint classify_point(double E, double lambda, const ClassifyConfig& cfg);

struct GridSpec {
  std::vector<double> lambdas;
  std::vector<double> energies;
};

struct ScanConfig {
  ClassifyConfig classify;
  std::string cache_dir;  // empty -> no caching
  int workers = 0;
};

// Classified grid, ordered lambda-major then energy.  Embarrassingly
// parallel; completed points are cached by key when cache_dir is set.
std::vector<PhasePoint> scan(const GridSpec& grid, const ScanConfig& cfg);

struct EdgePoint {
  double lambda = 0.0;
  double energy = 0.0;
  std::string criterion;  // "lyapunov" or "phi"
};

// Linear-interpolated crossings of the certification margins along lambda at
// fixed energy.  Empty output when no crossing exists.
std::vector<EdgePoint> edge_extract(const GridSpec& grid, TreeParams tree,
                                    const std::vector<PhasePoint>& points);

struct ContinuityRow {
  double lambda = 0.0;
  double integral = 0.0;
  double integral_free = 0.0;
  double difference = 0.0;
};

// Weak-continuity probe: quadrature of the Lyapunov estimate over I per
// lambda against the free closed form.
std::vector<ContinuityRow> continuity_check(Interval I,
                                            const std::vector<double>& lambdas,
                                            const ClassifyConfig& cfg,
                                            int n_nodes = 9);

}  // namespace bethe
