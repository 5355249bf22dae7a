#include "bethe/spectral_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bethe/parallel.hpp"

namespace bethe {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;
constexpr double kDegenerateSpacing = 1e-12;
}  // namespace

RescaledProcess rescale(const std::vector<double>& sorted_eigs, double E,
                        std::size_t volume, double W) {
  if (!(W > 0.0)) throw ConfigError("rescale: window halfwidth must be > 0");
  RescaledProcess p;
  p.center_energy = E;
  p.window_halfwidth = W;
  p.volume = volume;
  const double v = static_cast<double>(volume);
  for (double e : sorted_eigs) {
    double x = v * (e - E);
    if (std::abs(x) <= W) p.points.push_back(x);
  }
  return p;
}

std::vector<double> gap_ratios(const std::vector<double>& levels, std::size_t* n_degenerate) {
  std::vector<double> rs;
  if (n_degenerate) *n_degenerate = 0;
  if (levels.size() < 3) return rs;
  for (std::size_t i = 0; i + 2 < levels.size(); ++i) {
    double s1 = levels[i + 1] - levels[i];
    double s2 = levels[i + 2] - levels[i + 1];
    if (s1 < kDegenerateSpacing || s2 < kDegenerateSpacing) {
      rs.push_back(0.0);
      if (n_degenerate) ++*n_degenerate;
      continue;
    }
    rs.push_back(std::min(s1, s2) / std::max(s1, s2));
  }
  return rs;
}

GapStatistics gap_ratio(const std::vector<double>& levels) {
  GapStatistics g;
  auto rs = gap_ratios(levels, &g.n_degenerate);
  if (rs.size() < 1) throw ConfigError("gap_ratio: need at least 2 gaps");
  g.n_gaps = rs.size() + 1;
  double mean = std::accumulate(rs.begin(), rs.end(), 0.0) / rs.size();
  double var = 0.0;
  for (double r : rs) var += (r - mean) * (r - mean);
  var /= std::max<std::size_t>(1, rs.size() - 1);
  g.mean_gap_ratio = mean;
  g.std_error = std::sqrt(var / rs.size());
  return g;
}

std::vector<double> bulk_levels(const std::vector<double>& sorted_levels,
                                const BulkOptions& opts) {
  const std::size_t n = sorted_levels.size();
  std::vector<double> out;
  auto lo = static_cast<std::size_t>(opts.lo_frac * n);
  auto hi = static_cast<std::size_t>(opts.hi_frac * n);
  auto ex_lo = static_cast<std::size_t>((0.5 - 0.5 * opts.center_exclusion) * n);
  auto ex_hi = static_cast<std::size_t>((0.5 + 0.5 * opts.center_exclusion) * n);
  for (std::size_t i = lo; i < hi && i < n; ++i) {
    if (opts.center_exclusion > 0.0 && i >= ex_lo && i < ex_hi) continue;
    out.push_back(sorted_levels[i]);
  }
  return out;
}

SpacingHistogram spacing_distribution(const std::vector<std::vector<double>>& ensembles,
                                      int n_bins, double s_max) {
  // Pooled empirical integrated density: rank in the pooled sorted levels,
  // divided by the number of realizations, plays the role of N-bar(E).
  std::vector<double> pooled;
  for (const auto& lv : ensembles) pooled.insert(pooled.end(), lv.begin(), lv.end());
  std::sort(pooled.begin(), pooled.end());
  const double n_real = static_cast<double>(ensembles.size());
  if (pooled.size() < 4) throw ConfigError("spacing_distribution: too few levels");

  auto unfolded = [&](double e) {
    auto it = std::lower_bound(pooled.begin(), pooled.end(), e);
    return static_cast<double>(it - pooled.begin()) / n_real;
  };

  std::vector<double> spacings;
  for (const auto& lv : ensembles) {
    std::vector<double> sorted = lv;
    std::sort(sorted.begin(), sorted.end());
    // Merge numerically split multiplets before unfolding.
    std::vector<double> merged;
    for (double e : sorted)
      if (merged.empty() || e - merged.back() > kDegenerateSpacing) merged.push_back(e);
    for (std::size_t i = 0; i + 1 < merged.size(); ++i)
      spacings.push_back(unfolded(merged[i + 1]) - unfolded(merged[i]));
  }

  SpacingHistogram h;
  h.n_spacings = spacings.size();
  h.statistics_warning = spacings.size() < 1000;
  if (spacings.empty()) return h;
  h.mean_spacing = std::accumulate(spacings.begin(), spacings.end(), 0.0) / spacings.size();

  h.bin_centers.resize(n_bins);
  h.density.assign(n_bins, 0.0);
  const double w = s_max / n_bins;
  std::size_t in_range = 0;
  for (double s : spacings) {
    int b = static_cast<int>(s / w);
    if (b >= 0 && b < n_bins) {
      h.density[b] += 1.0;
      ++in_range;
    }
  }
  for (int b = 0; b < n_bins; ++b) {
    h.bin_centers[b] = (b + 0.5) * w;
    h.density[b] /= static_cast<double>(spacings.size()) * w;
  }
  (void)in_range;
  return h;
}

namespace {

double tv_to_reference(const SpacingHistogram& h,
                       const std::function<double(double)>& ref_cdf) {
  if (h.bin_centers.empty()) return 1.0;
  const double w = 2.0 * h.bin_centers[0];
  double tv = 0.0;
  double covered = 0.0;
  for (std::size_t b = 0; b < h.bin_centers.size(); ++b) {
    double lo = h.bin_centers[b] - 0.5 * w;
    double hi = h.bin_centers[b] + 0.5 * w;
    double q = ref_cdf(hi) - ref_cdf(lo);
    tv += std::abs(h.density[b] * w - q);
    covered += h.density[b] * w;
  }
  double hi_edge = h.bin_centers.back() + 0.5 * w;
  tv += std::abs((1.0 - covered) - (1.0 - ref_cdf(hi_edge)));
  return 0.5 * tv;
}

}  // namespace

double tv_to_poisson(const SpacingHistogram& h) {
  return tv_to_reference(h, [](double s) { return 1.0 - std::exp(-s); });
}

double tv_to_wigner(const SpacingHistogram& h) {
  return tv_to_reference(
      h, [](double s) { return 1.0 - std::exp(-kPi * s * s / 4.0); });
}

double participation_ratio(const Eigen::VectorXd& psi) {
  double norm2 = psi.squaredNorm();
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-8)
    throw std::domain_error("participation_ratio: vector must be normalized");
  double p4 = psi.array().square().square().sum();
  return 1.0 / p4;
}

std::vector<CenterReport> poisson_test_truncated_tree(const PoissonTestConfig& cfg) {
  if (cfg.depth < 2) throw ConfigError("poisson_test: depth too small for statistics");
  FiniteGraph g = build_truncated_tree(cfg.tree, cfg.depth, TreeFlavor::Rooted);
  RngHandle master = RngHandle::root(cfg.seed);

  // windows[c][r]: levels nearest center c in realization r.
  std::vector<std::vector<std::vector<double>>> windows(
      cfg.centers.size(), std::vector<std::vector<double>>(cfg.n_realizations));

  parallel_for(cfg.n_realizations, cfg.workers, [&](std::size_t r) {
    DisorderRealization real =
        make_realization(g, cfg.disorder, cfg.lambda, derive(master, {0, r}));
    Eigen::MatrixXd H = assemble_hamiltonian(g, real);
    SpectralDecomposition d = diagonalize(H, /*with_vectors=*/false, g.n_vertices);
    std::vector<double> eigs(d.eigenvalues.data(), d.eigenvalues.data() + d.eigenvalues.size());
    for (std::size_t c = 0; c < cfg.centers.size(); ++c) {
      double E = cfg.centers[c];
      auto it = std::lower_bound(eigs.begin(), eigs.end(), E);
      long center = it - eigs.begin();
      long m = std::min<long>(cfg.window_levels, static_cast<long>(eigs.size()));
      long lo = std::clamp<long>(center - m / 2, 0, static_cast<long>(eigs.size()) - m);
      windows[c][r].assign(eigs.begin() + lo, eigs.begin() + lo + m);
    }
  });

  std::vector<CenterReport> out;
  for (std::size_t c = 0; c < cfg.centers.size(); ++c) {
    CenterReport rep;
    rep.center_energy = cfg.centers[c];
    // Ensemble mean of per-realization mean gap ratios; se across realizations.
    std::vector<double> means;
    std::size_t n_gaps = 0, n_deg = 0, n_levels = 0;
    for (const auto& lv : windows[c]) {
      std::size_t deg = 0;
      auto rs = gap_ratios(lv, &deg);
      if (rs.empty()) continue;
      means.push_back(std::accumulate(rs.begin(), rs.end(), 0.0) / rs.size());
      n_gaps += rs.size() + 1;
      n_deg += deg;
      n_levels += lv.size();
    }
    if (means.size() < 2) {
      rep.statistics_warning = true;
      out.push_back(rep);
      continue;
    }
    double mean = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= means.size() - 1;
    rep.gaps.mean_gap_ratio = mean;
    rep.gaps.std_error = std::sqrt(var / means.size());
    rep.gaps.n_gaps = n_gaps;
    rep.gaps.n_degenerate = n_deg;
    rep.n_levels = n_levels;
    SpacingHistogram h = spacing_distribution(windows[c]);
    rep.tv_poisson = tv_to_poisson(h);
    rep.statistics_warning = h.statistics_warning;
    out.push_back(rep);
  }
  return out;
}

std::vector<RrgPointReport> rrg_statistics_scan(const RrgScanConfig& cfg) {
  RngHandle master = RngHandle::root(cfg.seed);
  std::vector<RrgPointReport> out;

  for (std::size_t p = 0; p < cfg.points.size(); ++p) {
    const RrgScanPoint& pt = cfg.points[p];
    std::vector<std::vector<double>> bulks(cfg.n_realizations);
    std::vector<double> pr_medians(cfg.n_realizations, -1.0);

    parallel_for(cfg.n_realizations, cfg.workers, [&](std::size_t r) {
      RngHandle h = derive(master, {p, r});
      FiniteGraph g = build_random_regular(cfg.tree, cfg.n_vertices, derive(h, {0}));
      DisorderRealization real =
          make_realization(g, pt.disorder, pt.lambda, derive(h, {1}));
      Eigen::MatrixXd H = assemble_hamiltonian(g, real);
      SpectralDecomposition d = diagonalize(H, cfg.compute_pr, g.n_vertices);
      std::vector<double> eigs(d.eigenvalues.data(),
                               d.eigenvalues.data() + d.eigenvalues.size());
      bulks[r] = bulk_levels(eigs, cfg.bulk);
      if (cfg.compute_pr) {
        auto lo = static_cast<Eigen::Index>(cfg.bulk.lo_frac * eigs.size());
        auto hi = static_cast<Eigen::Index>(cfg.bulk.hi_frac * eigs.size());
        std::vector<double> prs;
        for (Eigen::Index i = lo; i < hi; ++i)
          prs.push_back(participation_ratio(d.eigenvectors.col(i)));
        std::sort(prs.begin(), prs.end());
        pr_medians[r] = prs[prs.size() / 2] / static_cast<double>(cfg.n_vertices);
      }
    });

    RrgPointReport rep;
    rep.lambda = pt.lambda;
    rep.disorder = pt.disorder.name();
    std::vector<double> means;
    std::size_t n_gaps = 0, n_deg = 0;
    for (const auto& lv : bulks) {
      std::size_t deg = 0;
      auto rs = gap_ratios(lv, &deg);
      if (rs.empty()) continue;
      means.push_back(std::accumulate(rs.begin(), rs.end(), 0.0) / rs.size());
      n_gaps += rs.size() + 1;
      n_deg += deg;
    }
    if (means.size() >= 2) {
      double mean = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
      double var = 0.0;
      for (double m : means) var += (m - mean) * (m - mean);
      var /= means.size() - 1;
      rep.gaps.mean_gap_ratio = mean;
      rep.gaps.std_error = std::sqrt(var / means.size());
      rep.gaps.n_gaps = n_gaps;
      rep.gaps.n_degenerate = n_deg;
      SpacingHistogram h = spacing_distribution(bulks);
      rep.tv_poisson = tv_to_poisson(h);
      rep.tv_goe = tv_to_wigner(h);
      // Statistics floor: error bar too wide to separate the references.
      rep.inconclusive =
          3.0 * rep.gaps.std_error > 0.5 * (kGoeMeanR - kPoissonMeanR) ||
          h.statistics_warning;
    } else {
      rep.inconclusive = true;
    }
    if (cfg.compute_pr) {
      std::vector<double> med = pr_medians;
      std::sort(med.begin(), med.end());
      rep.median_pr_fraction = med[med.size() / 2];
    }
    out.push_back(rep);
  }
  return out;
}

}  // namespace bethe
