#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace bethe {

// 64-bit finalizer (splitmix64 style). Full avalanche, bijective.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Value-like handle to a logical random stream.  Streams are identified by a
// key derived purely from (master_seed, derivation path), so stream assignment
// is by logical index and independent of scheduling order.
struct RngHandle {
  std::uint64_t master_seed = 0;
  std::uint64_t key = 0;

  static RngHandle root(std::uint64_t seed) {
    return {seed, mix64(seed + 0x428a2f98d728ae22ULL)};
  }
};

inline RngHandle derive(RngHandle h, std::span<const std::uint64_t> path) {
  for (std::uint64_t p : path) h.key = mix64(h.key ^ mix64(p + kGolden));
  return h;
}

inline RngHandle derive(RngHandle h, std::initializer_list<std::uint64_t> path) {
  return derive(h, std::span<const std::uint64_t>(path.begin(), path.size()));
}

// Counter-based generator: output n is a hash of (key, n).  State is just the
// counter, so streams are cheap to copy and replay.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream() : key_(0) {}
  explicit Stream(RngHandle h) : key_(h.key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on [0,1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // Uniform index in [0, n) via 128-bit multiply; n must be > 0.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Box-Muller; caches the spare deviate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Standard Cauchy by inverse CDF; keeps the exact heavy tails.
  double cauchy() {
    double u;
    do {
      u = next_double();
    } while (u == 0.5 || u == 0.0);
    return std::tan(3.14159265358979323846264338328 * (u - 0.5));
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bethe
