#include "bethe/exact_forms.hpp"

#include <cmath>
#include <complex>

namespace bethe {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;
}

Complex gamma0(TreeParams tp, HalfPlanePoint zp) {
  const double K = tp.branching;
  const double band = 2.0 * std::sqrt(K);
  if (zp.eta > 0.0) {
    Complex z = zp.value();
    Complex w = std::sqrt(z * z - 4.0 * K);
    Complex r1 = (-z + w) / (2.0 * K);
    Complex r2 = (-z - w) / (2.0 * K);
    return (r1.imag() > 0.0) ? r1 : r2;
  }
  const double E = zp.energy;
  if (std::abs(std::abs(E) - band) < 1e-14)
    throw std::domain_error("gamma0: branch point |E| = 2 sqrt(K) at eta = 0");
  if (std::abs(E) < band) {
    // Boundary value from above: Im > 0 inside the band.
    return Complex(-E, std::sqrt(4.0 * K - E * E)) / (2.0 * K);
  }
  // Outside the band the limit is real: the root continuous with -1/z at
  // infinity, i.e. the smaller-magnitude one.
  double s = (E > 0.0) ? 1.0 : -1.0;
  return Complex((-E + s * std::sqrt(E * E - 4.0 * K)) / (2.0 * K), 0.0);
}

double lyapunov_exact_free(TreeParams K, HalfPlanePoint z) {
  return -std::log(std::abs(gamma0(K, z)));
}

double lyapunov_exact_cauchy(TreeParams K, double lambda, double E) {
  if (lambda < 0.0) throw std::invalid_argument("lyapunov_exact_cauchy: lambda < 0");
  return lyapunov_exact_free(K, HalfPlanePoint(E, lambda));
}

std::optional<Interval> spectrum_edges(TreeParams tp, double lambda,
                                       const DisorderSpec& disorder) {
  const double band = 2.0 * std::sqrt(static_cast<double>(tp.branching));
  if (lambda == 0.0) return Interval{-band, band};
  auto supp = disorder.support();
  if (!supp) return std::nullopt;
  double a = lambda * supp->lo;
  double b = lambda * supp->hi;
  if (a > b) std::swap(a, b);
  return Interval{-band + a, band + b};
}

LambdaThresholds lambda_thresholds(TreeParams tp, const DisorderSpec& disorder) {
  const double K = tp.branching;
  if (!std::isfinite(disorder.sup_density()))
    throw ConfigError("lambda_thresholds: sup density must be finite");
  LambdaThresholds t;
  double sk = std::sqrt(K);
  t.lambda_min = 0.5 * (sk - 1.0) * (sk - 1.0);
  t.lambda_c_upper =
      disorder.sup_density() * K * (std::exp(1.0) * std::log(K) + 1.0);
  if (disorder.kind() == DisorderKind::Cauchy) t.lambda_c_lower = K - 1.0;
  return t;
}

double diffusion_kernel(TreeParams tp, int distance) {
  if (distance < 0) throw std::invalid_argument("diffusion_kernel: distance < 0");
  const double K = tp.branching;
  // (-Delta)^{-1} = (T - z)^{-1} at z = -(K+1); the radial reduction of the
  // tree resolvent gives G(0,0) = K/(K^2-1) and per-step factor 1/K.
  return K / (K * K - 1.0) * std::pow(K, -distance);
}

double kesten_mckay_dos(TreeParams tp, double E) {
  const double K = tp.branching;
  const double band = 2.0 * std::sqrt(K);
  if (std::abs(E) >= band) return 0.0;
  Complex g = Complex(-E, std::sqrt(4.0 * K - E * E)) / (2.0 * K);
  Complex G = 1.0 / (-E - (K + 1.0) * g);
  return G.imag() / kPi;
}

double log_moment_bound(double sup_density, double lambda, double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("log_moment_bound: s in (0,1)");
  if (!(lambda > 0.0)) throw std::domain_error("log_moment_bound: lambda > 0");
  return s * std::log(sup_density) - std::log1p(-s) - s * std::log(lambda);
}

double min_log_moment_bound(double sup_density, double lambda) {
  // d/ds log C_s = log(||rho||/lambda) + 1/(1-s); stationary at
  // s* = 1 - 1/log(lambda/||rho||), interior only for lambda > e ||rho||.
  double ratio = std::log(lambda / sup_density);
  if (ratio > 1.0) {
    double s = 1.0 - 1.0 / ratio;
    return log_moment_bound(sup_density, lambda, s);
  }
  // Bound is monotone on (0,1); infimum at s -> 0 equals 0, so scan coarsely.
  double best = 0.0;
  for (int i = 1; i < 100; ++i) {
    double s = i / 100.0;
    best = std::min(best, log_moment_bound(sup_density, lambda, s));
  }
  return best;
}

}  // namespace bethe
