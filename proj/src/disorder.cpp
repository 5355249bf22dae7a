#include "bethe/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bethe {

namespace {
constexpr double kPi = 3.14159265358979323846264338328;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

DisorderSpec DisorderSpec::cauchy() {
  // Finite moments only of order r < 1.
  return DisorderSpec(DisorderKind::Cauchy, 1.0 / kPi, 1.0);
}

DisorderSpec DisorderSpec::gaussian() {
  return DisorderSpec(DisorderKind::Gaussian, 1.0 / std::sqrt(2.0 * kPi), kInf);
}

DisorderSpec DisorderSpec::uniform() {
  return DisorderSpec(DisorderKind::Uniform, 0.5, kInf);
}

DisorderSpec DisorderSpec::tabulated(std::vector<double> v, std::vector<double> rho,
                                     double moment_order_r) {
  if (v.size() < 2 || v.size() != rho.size())
    throw ConfigError("tabulated disorder: need >= 2 (v, rho) pairs of equal length");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1]))
      throw ConfigError("tabulated disorder: grid must be strictly increasing");
  for (double r : rho)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw ConfigError("tabulated disorder: density values must be finite and >= 0");

  // Trapezoid mass of the piecewise-linear density.
  double mass = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i)
    mass += 0.5 * (rho[i] + rho[i - 1]) * (v[i] - v[i - 1]);
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw ConfigError("tabulated disorder: density is not normalizable");
  for (double& r : rho) r /= mass;

  DisorderSpec spec(DisorderKind::Tabulated, *std::max_element(rho.begin(), rho.end()),
                    moment_order_r);
  spec.cum_.resize(v.size());
  spec.cum_[0] = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i)
    spec.cum_[i] = spec.cum_[i - 1] + 0.5 * (rho[i] + rho[i - 1]) * (v[i] - v[i - 1]);
  spec.cum_.back() = 1.0;
  spec.grid_ = std::move(v);
  spec.rho_ = std::move(rho);
  return spec;
}

DisorderSpec DisorderSpec::tabulated_from_csv(const std::string& path,
                                              double moment_order_r) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tabulated density file: " + path);
  std::vector<double> v, rho;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, r;
    if (ls >> x >> r) {
      v.push_back(x);
      rho.push_back(r);
    }
  }
  return tabulated(std::move(v), std::move(rho), moment_order_r);
}

double DisorderSpec::density(double v) const {
  switch (kind_) {
    case DisorderKind::Cauchy:
      return 1.0 / (kPi * (1.0 + v * v));
    case DisorderKind::Gaussian:
      return std::exp(-0.5 * v * v) / std::sqrt(2.0 * kPi);
    case DisorderKind::Uniform:
      return (v >= -1.0 && v <= 1.0) ? 0.5 : 0.0;
    case DisorderKind::Tabulated: {
      if (v <= grid_.front() || v >= grid_.back()) {
        if (v == grid_.front()) return rho_.front();
        if (v == grid_.back()) return rho_.back();
        return 0.0;
      }
      auto it = std::upper_bound(grid_.begin(), grid_.end(), v);
      std::size_t i = static_cast<std::size_t>(it - grid_.begin());
      double t = (v - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
      return rho_[i - 1] + t * (rho_[i] - rho_[i - 1]);
    }
  }
  return 0.0;
}

double DisorderSpec::cdf(double v) const {
  switch (kind_) {
    case DisorderKind::Cauchy:
      return 0.5 + std::atan(v) / kPi;
    case DisorderKind::Gaussian:
      return 0.5 * std::erfc(-v / std::sqrt(2.0));
    case DisorderKind::Uniform:
      if (v <= -1.0) return 0.0;
      if (v >= 1.0) return 1.0;
      return 0.5 * (v + 1.0);
    case DisorderKind::Tabulated: {
      if (v <= grid_.front()) return 0.0;
      if (v >= grid_.back()) return 1.0;
      auto it = std::upper_bound(grid_.begin(), grid_.end(), v);
      std::size_t i = static_cast<std::size_t>(it - grid_.begin());
      double dv = v - grid_[i - 1];
      double slope = (rho_[i] - rho_[i - 1]) / (grid_[i] - grid_[i - 1]);
      return cum_[i - 1] + rho_[i - 1] * dv + 0.5 * slope * dv * dv;
    }
  }
  return 0.0;
}

double DisorderSpec::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: u must be in (0,1)");
  switch (kind_) {
    case DisorderKind::Cauchy:
      return std::tan(kPi * (u - 0.5));
    case DisorderKind::Gaussian: {
      // Newton on the CDF from a rational starting guess (Beasley-Springer).
      double x = 0.0;
      for (int it = 0; it < 60; ++it) {
        double f = cdf(x) - u;
        double d = density(x);
        if (d <= 0.0) break;
        double step = f / d;
        x -= step;
        if (std::abs(step) < 1e-14) break;
      }
      return x;
    }
    case DisorderKind::Uniform:
      return 2.0 * u - 1.0;
    case DisorderKind::Tabulated: {
      auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
      std::size_t i = std::min<std::size_t>(
          std::max<std::size_t>(1, static_cast<std::size_t>(it - cum_.begin())),
          cum_.size() - 1);
      double du = u - cum_[i - 1];
      double h = grid_[i] - grid_[i - 1];
      double a = rho_[i - 1];
      double slope = (rho_[i] - rho_[i - 1]) / h;
      // Solve a*x + slope*x^2/2 = du on [0, h].
      double x;
      if (std::abs(slope) < 1e-300) {
        x = (a > 0.0) ? du / a : 0.0;
      } else {
        double disc = a * a + 2.0 * slope * du;
        x = (disc > 0.0) ? (-a + std::sqrt(disc)) / slope : 0.0;
      }
      x = std::clamp(x, 0.0, h);
      return grid_[i - 1] + x;
    }
  }
  return 0.0;
}

double DisorderSpec::sample(Stream& rng) const {
  switch (kind_) {
    case DisorderKind::Cauchy:
      return rng.cauchy();
    case DisorderKind::Gaussian:
      return rng.gaussian();
    case DisorderKind::Uniform:
      return rng.uniform(-1.0, 1.0);
    case DisorderKind::Tabulated: {
      double u;
      do {
        u = rng.next_double();
      } while (u == 0.0);
      return quantile(u);
    }
  }
  return 0.0;
}

void DisorderSpec::sample(Stream& rng, std::span<double> out) const {
  for (double& x : out) x = sample(rng);
}

std::optional<Interval> DisorderSpec::support() const {
  switch (kind_) {
    case DisorderKind::Cauchy:
    case DisorderKind::Gaussian:
      return std::nullopt;
    case DisorderKind::Uniform:
      return Interval{-1.0, 1.0};
    case DisorderKind::Tabulated:
      return Interval{grid_.front(), grid_.back()};
  }
  return std::nullopt;
}

std::string DisorderSpec::name() const {
  switch (kind_) {
    case DisorderKind::Cauchy:
      return "cauchy";
    case DisorderKind::Gaussian:
      return "gaussian";
    case DisorderKind::Uniform:
      return "uniform";
    case DisorderKind::Tabulated:
      return "tabulated";
  }
  return "?";
}

}  // namespace bethe
