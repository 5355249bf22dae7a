#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace bethe {

using Complex = std::complex<double>;

// Spectral parameter z = E + i*eta on the closed upper half plane.
struct HalfPlanePoint {
  double energy = 0.0;
  double eta = 0.0;

  HalfPlanePoint() = default;
  HalfPlanePoint(double E, double eta_) : energy(E), eta(eta_) {
    if (eta < 0.0) throw std::invalid_argument("HalfPlanePoint: eta must be >= 0");
  }
  Complex value() const { return {energy, eta}; }
  bool interior() const { return eta > 0.0; }
};

// Branching number of the rooted tree; coordination number is K+1.
struct TreeParams {
  int branching = 2;

  TreeParams() = default;
  explicit TreeParams(int K) : branching(K) {
    if (K < 2) throw std::invalid_argument("TreeParams: branching must be >= 2");
  }
  int coordination() const { return branching + 1; }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
  double length() const { return hi - lo; }
};

// Error taxonomy mapped onto CLI exit codes (2/3/4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bethe
