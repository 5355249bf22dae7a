#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bethe/rng.hpp"
#include "bethe/types.hpp"

namespace bethe {

enum class DisorderKind { Cauchy, Gaussian, Uniform, Tabulated };

// Single-site distribution P_0 with density rho.  Immutable after
// construction; safe to share across workers.
class DisorderSpec {
 public:
  static DisorderSpec cauchy();            // scale 1
  static DisorderSpec gaussian();          // mean 0, variance 1
  static DisorderSpec uniform();           // support [-1, 1]
  // Piecewise-linear density on a sorted grid; renormalized at load time.
  // moment_order_r is declared metadata (largest finite moment order).
  static DisorderSpec tabulated(std::vector<double> v, std::vector<double> rho,
                                double moment_order_r);
  static DisorderSpec tabulated_from_csv(const std::string& path,
                                         double moment_order_r);

  DisorderKind kind() const { return kind_; }
  double sup_density() const { return sup_density_; }
  double moment_order() const { return moment_order_r_; }

  double density(double v) const;
  double cdf(double v) const;
  double quantile(double u) const;  // u in (0,1)

  double sample(Stream& rng) const;
  void sample(Stream& rng, std::span<double> out) const;

  // Exact support for built-ins, hull of grid for tabulated; nullopt means
  // unbounded.
  std::optional<Interval> support() const;

  std::string name() const;

 private:
  DisorderSpec(DisorderKind k, double sup_density, double moment_order_r)
      : kind_(k), sup_density_(sup_density), moment_order_r_(moment_order_r) {}

  DisorderKind kind_;
  double sup_density_;
  double moment_order_r_;

  // Tabulated data: sorted grid, renormalized density, cumulative integral.
  std::vector<double> grid_;
  std::vector<double> rho_;
  std::vector<double> cum_;
};

}  // namespace bethe
