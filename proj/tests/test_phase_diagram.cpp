#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bethe/phase_diagram.hpp"

using namespace bethe;

namespace {

ClassifyConfig cheap_config() {
  ClassifyConfig cfg;
  cfg.tree = TreeParams(2);
  cfg.disorder = DisorderSpec::cauchy();
  cfg.mc.n_pool = 4000;
  cfg.mc.burn_in_sweeps = 40;
  cfg.mc.measure_sweeps = 30;
  cfg.mc.n_replicas = 2048;
  cfg.run_dos = false;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("outside-spectrum early exit for bounded disorder") {
  ClassifyConfig cfg = cheap_config();
  cfg.disorder = DisorderSpec::uniform();
  PhasePoint p = classify_point(5.0, 0.1, cfg);
  CHECK(p.label == PhaseLabel::OutsideSpectrum);
  // Unbounded disorder never takes the early exit.
  ClassifyConfig cauchy = cheap_config();
  PhasePoint q = classify_point(5.0, 0.1, cauchy);
  CHECK(q.label != PhaseLabel::OutsideSpectrum);
}

TEST_CASE("weak disorder in the band certifies delocalization") {
  PhasePoint p = classify_point(0.0, 0.2, cheap_config());
  CHECK(p.label == PhaseLabel::DelocalizedLyapunovCertified);
  CHECK(p.margin_sigma > 3.0);
  // Exact check: L(0.2 at E=0) = L_0(0.2 i) < log 2.
  CHECK(p.lyapunov.value < std::log(2.0));
}

TEST_CASE("strong Cauchy disorder certifies localization analytically") {
  PhasePoint p = classify_point(0.0, 20.0, cheap_config());
  CHECK(p.label == PhaseLabel::LocalizedPhiCertified);
  CHECK(p.diagnostics == "analytic C_s certificate");
}

TEST_CASE("labels round trip through to_string") {
  CHECK(to_string(PhaseLabel::DelocalizedLyapunovCertified) == "delocalized_lyapunov");
  CHECK(to_string(PhaseLabel::LocalizedPhiCertified) == "localized_phi");
  CHECK(to_string(PhaseLabel::OutsideSpectrum) == "outside_spectrum");
  CHECK(to_string(PhaseLabel::Undetermined) == "undetermined");
}

TEST_CASE("scan is lambda-major, deterministic, and cache-stable") {
  GridSpec grid;
  grid.lambdas = {0.2, 20.0};
  grid.energies = {0.0, 1.0};
  ScanConfig sc;
  sc.classify = cheap_config();
  std::string cache = "phase_cache_test";
  std::filesystem::remove_all(cache);
  sc.cache_dir = cache;

  auto pts = scan(grid, sc);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].lambda == 0.2);
  CHECK(pts[0].energy == 0.0);
  CHECK(pts[1].energy == 1.0);
  CHECK(pts[2].lambda == 20.0);
  CHECK(pts[0].label == PhaseLabel::DelocalizedLyapunovCertified);
  CHECK(pts[2].label == PhaseLabel::LocalizedPhiCertified);

  // Second run is served from the cache and identical.
  auto again = scan(grid, sc);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(again[i].lyapunov.value == pts[i].lyapunov.value);
    CHECK(again[i].label == pts[i].label);
    CHECK(again[i].margin_sigma == pts[i].margin_sigma);
  }
  std::filesystem::remove_all(cache);
}

TEST_CASE("edge extraction finds the synthetic crossing") {
  // Synthetic grid: Lyapunov margin changes sign between lambda = 0.8 and 1.2
  // at both energies; the phi margin crosses only at E = 1.
  GridSpec grid;
  grid.lambdas = {0.8, 1.2};
  grid.energies = {0.0, 1.0};
  std::vector<PhasePoint> pts(4);
  double logK = std::log(2.0);
  for (std::size_t il = 0; il < 2; ++il)
    for (std::size_t ie = 0; ie < 2; ++ie) {
      PhasePoint& p = pts[il * 2 + ie];
      p.lambda = grid.lambdas[il];
      p.energy = grid.energies[ie];
      p.lyapunov.value = logK + (p.lambda - 1.0);  // crosses log K at lambda = 1
      p.lyapunov.n_effective = 1;
      if (ie == 1) {
        CavityEstimate phi;
        phi.value = -logK - (p.lambda - 1.1);  // crosses -log K at lambda = 1.1
        p.phi_at_one = phi;
      }
    }
  auto edges = edge_extract(grid, TreeParams(2), pts);
  REQUIRE(edges.size() == 3);
  int n_lyap = 0, n_phi = 0;
  for (const EdgePoint& e : edges) {
    if (e.criterion == "lyapunov") {
      ++n_lyap;
      CHECK(e.lambda == doctest::Approx(1.0));
    } else {
      ++n_phi;
      CHECK(e.lambda == doctest::Approx(1.1));
      CHECK(e.energy == doctest::Approx(1.0));
    }
  }
  CHECK(n_lyap == 2);
  CHECK(n_phi == 1);
}

TEST_CASE("continuity check is exact at lambda = 0") {
  ClassifyConfig cfg = cheap_config();
  auto rows = continuity_check(Interval{-1.0, 1.0}, {0.0}, cfg, 9);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].difference == doctest::Approx(0.0));
  // Free integral over an interior interval: log sqrt K * |I|.
  CHECK(rows[0].integral_free == doctest::Approx(2.0 * 0.5 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("small lambda stays close to the free integral") {
  ClassifyConfig cfg = cheap_config();
  auto rows = continuity_check(Interval{-1.0, 1.0}, {0.05}, cfg, 5);
  REQUIRE(rows.size() == 1);
  // The exact Cauchy shift is integral of (L_0(E + 0.05i) - L_0(E)) ~ 0.035
  // over this interval; the estimate must sit near it, not at zero.
  CHECK(rows[0].difference < 0.06);
}
