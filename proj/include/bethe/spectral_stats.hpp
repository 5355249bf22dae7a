#pragma once

#include <string>
#include <vector>

#include "bethe/finite_graph.hpp"
#include "bethe/types.hpp"

namespace bethe {

// Rescaled local eigenvalue process |volume| * (E_n - E) within [-W, W].
struct RescaledProcess {
  double center_energy = 0.0;
  double window_halfwidth = 0.0;
  std::size_t volume = 0;
  std::vector<double> points;
};

RescaledProcess rescale(const std::vector<double>& sorted_eigs, double E,
                        std::size_t volume, double W);

struct GapStatistics {
  double mean_gap_ratio = 0.0;
  double std_error = 0.0;
  std::size_t n_gaps = 0;
  std::size_t n_degenerate = 0;  // zero spacings, counted with r = 0
};

// r_n = min(s_n, s_{n+1}) / max(s_n, s_{n+1}) over consecutive spacings.
std::vector<double> gap_ratios(const std::vector<double>& sorted_levels,
                               std::size_t* n_degenerate = nullptr);
GapStatistics gap_ratio(const std::vector<double>& sorted_levels);

// Reference values for the discriminant.
constexpr double kPoissonMeanR = 0.3862943611198906;  // 2 ln 2 - 1
constexpr double kGoeMeanR = 0.5307;                  // Monte Carlo reference

// Bulk selection by rank: central [lo_frac, hi_frac] slice, optionally
// dropping a central rank band (symmetry-induced degeneracies at E = 0).
struct BulkOptions {
  double lo_frac = 0.30;
  double hi_frac = 0.70;
  double center_exclusion = 0.05;
};
std::vector<double> bulk_levels(const std::vector<double>& sorted_levels,
                                const BulkOptions& opts);

struct SpacingHistogram {
  std::vector<double> bin_centers;
  std::vector<double> density;  // normalized to unit mass over the binned range
  double mean_spacing = 0.0;
  std::size_t n_spacings = 0;
  bool statistics_warning = false;  // fewer than 10^3 pooled spacings
};

// Unfolded spacing histogram over an ensemble of level sets; unfolding uses
// the pooled empirical integrated density (rank interpolation).
SpacingHistogram spacing_distribution(const std::vector<std::vector<double>>& ensembles,
                                      int n_bins = 40, double s_max = 4.0);

// Total-variation distances of the histogram to the reference laws.
double tv_to_poisson(const SpacingHistogram& h);
double tv_to_wigner(const SpacingHistogram& h);

// PR = 1 / sum psi^4 for a normalized vector; in [1, n].
double participation_ratio(const Eigen::VectorXd& psi);

// Ensemble experiment: Poisson statistics on truncated trees T_L.
struct PoissonTestConfig {
  TreeParams tree{2};
  int depth = 9;
  double lambda = 1.0;
  DisorderSpec disorder = DisorderSpec::cauchy();
  std::vector<double> centers{0.0};
  int n_realizations = 200;
  int window_levels = 101;  // levels nearest the center per realization
  std::uint64_t seed = 1;
  int workers = 0;  // 0 -> default
};

struct CenterReport {
  double center_energy = 0.0;
  GapStatistics gaps;
  double tv_poisson = 0.0;
  std::size_t n_levels = 0;
  bool statistics_warning = false;
};

std::vector<CenterReport> poisson_test_truncated_tree(const PoissonTestConfig& config);

// Ensemble experiment: gap statistics / PR scan on random regular graphs.
struct RrgScanPoint {
  double lambda = 0.0;
  DisorderSpec disorder = DisorderSpec::uniform();
};

struct RrgScanConfig {
  TreeParams tree{2};
  int n_vertices = 2000;
  std::vector<RrgScanPoint> points;
  int n_realizations = 50;
  bool compute_pr = false;
  BulkOptions bulk;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct RrgPointReport {
  double lambda = 0.0;
  std::string disorder;
  GapStatistics gaps;
  double tv_poisson = 0.0;
  double tv_goe = 0.0;
  double median_pr_fraction = -1.0;  // -1 when PR not computed
  bool inconclusive = false;         // statistics floor
};

std::vector<RrgPointReport> rrg_statistics_scan(const RrgScanConfig& config);

}  // namespace bethe
