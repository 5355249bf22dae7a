#pragma once

#include <optional>

#include "bethe/disorder.hpp"
#include "bethe/types.hpp"

namespace bethe {

// Closed forms for the disorder-free model and the Cauchy case, used both as
// user-facing output and as ground truth for the Monte Carlo engine.

// Herglotz root of K*G^2 + z*G + 1 = 0.  For eta = 0 returns the boundary
// limit from above; throws std::domain_error at the branch points |E| = 2*sqrt(K).
Complex gamma0(TreeParams K, HalfPlanePoint z);

// L_0(z) = -log|gamma0(K, z)|.
double lyapunov_exact_free(TreeParams K, HalfPlanePoint z);

// Cauchy disorder: L_lambda(E) = L_0(E + i*lambda).
double lyapunov_exact_cauchy(TreeParams K, double lambda, double E);

// [-2 sqrt K, 2 sqrt K] + lambda * supp P_0; nullopt means all reals.
std::optional<Interval> spectrum_edges(TreeParams K, double lambda,
                                       const DisorderSpec& disorder);

struct LambdaThresholds {
  double lambda_min;                     // (sqrt K - 1)^2 / 2
  double lambda_c_upper;                 // ||rho||_inf * K * (e log K + 1)
  std::optional<double> lambda_c_lower;  // K - 1, Cauchy only
};

LambdaThresholds lambda_thresholds(TreeParams K, const DisorderSpec& disorder);

// <delta_x, (-Delta)^{-1} delta_0> for |x| = distance on the Bethe lattice,
// Delta = -T - (K+1) Id.  Equals K/(K^2-1) * K^{-distance}.
double diffusion_kernel(TreeParams K, int distance);

// Density of states of T on the Bethe lattice (lambda = 0); zero off the band.
double kesten_mckay_dos(TreeParams K, double E);

// log C_s(lambda) with C_s = ||rho||_inf^s / ((1-s) lambda^s), the conditional
// fractional-moment bound on phi(s; z).
double log_moment_bound(double sup_density, double lambda, double s);

// min over s in (0,1) of log C_s(lambda).
double min_log_moment_bound(double sup_density, double lambda);

}  // namespace bethe
