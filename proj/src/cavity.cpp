#include "bethe/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bethe {

namespace {

struct BatchStats {
  double value = 0.0;
  double se = 0.0;
};

BatchStats batch_means(const std::vector<double>& xs, int n_batches) {
  BatchStats out;
  const std::size_t n = xs.size();
  if (n == 0) return out;
  n_batches = std::max(1, std::min<int>(n_batches, static_cast<int>(n)));
  std::vector<double> b(n_batches, 0.0);
  std::vector<std::size_t> cnt(n_batches, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = i * n_batches / n;
    b[k] += xs[i];
    ++cnt[k];
  }
  double mean = 0.0;
  for (int k = 0; k < n_batches; ++k) {
    b[k] /= static_cast<double>(cnt[k]);
    mean += b[k];
  }
  mean /= n_batches;
  double var = 0.0;
  for (int k = 0; k < n_batches; ++k) var += (b[k] - mean) * (b[k] - mean);
  var /= std::max(1, n_batches - 1);
  out.value = mean;
  out.se = std::sqrt(var / n_batches);
  return out;
}

// Equilibration gate: first and second halves of the measurement window must
// agree within 3 combined standard errors.  The floor has a small relative
// component so that deterministic pools (lambda = 0, where the statistical
// error vanishes) are not held to machine precision: residual drift below
// 1e-7 relative is far beneath every oracle tolerance in use.
bool stationary(const std::vector<double>& xs) {
  if (xs.size() < 4) return true;
  std::size_t h = xs.size() / 2;
  std::vector<double> a(xs.begin(), xs.begin() + h);
  std::vector<double> b(xs.begin() + h, xs.end());
  BatchStats sa = batch_means(a, 5);
  BatchStats sb = batch_means(b, 5);
  double comb = std::sqrt(sa.se * sa.se + sb.se * sb.se);
  double scale = 0.5 * (std::abs(sa.value) + std::abs(sb.value));
  return std::abs(sa.value - sb.value) <= 3.0 * comb + 1e-9 + 1e-7 * scale;
}

// Per-sweep scalar observable measured over the window.  When the halves
// drift the burn-in escalates geometrically (up to 16x) before giving up:
// heavy-tailed pools trip a one-shot gate too often, and near band edges the
// fixed-point multiplier approaches 1 so relaxation is genuinely slow.
template <class Observe>
std::vector<double> measure_sweeps_checked(CavityPool& pool, const McBudget& mc,
                                           const char* what, Observe&& observe) {
  for (int attempt = 0; attempt < 5; ++attempt) {
    pool.sweep((1 << attempt) * mc.burn_in_sweeps);
    std::vector<double> xs;
    xs.reserve(mc.measure_sweeps);
    for (int s = 0; s < mc.measure_sweeps; ++s) {
      pool.sweep(1);
      xs.push_back(observe(pool));
    }
    if (stationary(xs)) return xs;
    if (attempt == 4) {
      std::ostringstream os;
      os << "cavity " << what
         << ": drift between measurement halves persists after extended burn-in; "
            "pool not equilibrated";
      throw ConvergenceError(os.str());
    }
  }
  return {};
}

CavityEstimate extrapolate_eta(const std::vector<std::array<double, 3>>& trace,
                               std::size_t n_effective) {
  CavityEstimate est;
  est.trace = trace;
  est.n_effective = n_effective;
  if (trace.size() == 1) {
    est.value = trace[0][1];
    est.std_error = trace[0][2];
    est.eta = trace[0][0];
    return est;
  }
  const auto& p1 = trace[trace.size() - 2];  // larger eta
  const auto& p2 = trace.back();             // smaller eta
  double e1 = p1[0], v1 = p1[1], s1 = p1[2];
  double e2 = p2[0], v2 = p2[1], s2 = p2[2];
  double t = e2 / (e1 - e2);
  double v0 = v2 - (v1 - v2) * t;
  double stat = std::sqrt((t * s1) * (t * s1) + ((1.0 + t) * s2) * ((1.0 + t) * s2));
  double sys = std::abs(v0 - v2);
  est.value = v0;
  est.std_error = std::sqrt(stat * stat + sys * sys);
  est.eta = 0.0;
  est.extrapolation_dominated = sys > stat;
  return est;
}

void validate_protocol(const EtaProtocol& protocol) {
  if (protocol.etas.empty()) throw ConfigError("eta protocol: empty");
  for (std::size_t i = 0; i < protocol.etas.size(); ++i) {
    if (!(protocol.etas[i] > 0.0)) throw ConfigError("eta protocol: eta must be > 0");
    if (i > 0 && !(protocol.etas[i] < protocol.etas[i - 1]))
      throw ConfigError("eta protocol: etas must be decreasing");
  }
}

}  // namespace

CavityPool::CavityPool(CavityParams params, std::size_t n_pool, RngHandle rng)
    : params_(std::move(params)), rng_(Stream(rng)) {
  if (n_pool < 1000) throw ConfigError("cavity pool: n_pool must be >= 1000");
  if (!(params_.z.eta > 0.0))
    throw ConfigError("cavity pool: eta = 0 is reached only by extrapolation");
  samples_.resize(n_pool);
  const Complex z = params_.z.value();
  for (Complex& g : samples_) {
    double w = params_.disorder.sample(rng_);
    g = 1.0 / (params_.lambda * w - z);
  }
}

Complex CavityPool::draw_new(Stream& rng) const {
  const int K = params_.tree.branching;
  Complex sum = 0.0;
  for (int j = 0; j < K; ++j) sum += samples_[rng.index(samples_.size())];
  double w = params_.disorder.sample(rng);
  return 1.0 / (params_.lambda * w - params_.z.value() - sum);
}

void CavityPool::sweep(int n_sweeps) {
  if (!(params_.z.eta > 0.0)) throw ConfigError("cavity sweep: eta must be > 0");
  const std::size_t n = samples_.size();
  const double bound = 1.0 / params_.z.eta * (1.0 + 1e-9);
  for (int s = 0; s < n_sweeps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      Complex g = draw_new(rng_);
      if (!(std::abs(g) <= bound) || !(g.imag() > 0.0))
        throw std::logic_error("cavity sweep: Herglotz/resolvent invariant violated");
      samples_[rng_.index(n)] = g;
    }
    ++sweep_count_;
  }
}

void CavityPool::set_z(HalfPlanePoint z) {
  if (!(z.eta > 0.0)) throw ConfigError("cavity set_z: eta must be > 0");
  params_.z = z;
}

double CavityPool::min_im() const {
  double m = std::numeric_limits<double>::infinity();
  for (const Complex& g : samples_) m = std::min(m, g.imag());
  return m;
}

double CavityPool::max_abs() const {
  double m = 0.0;
  for (const Complex& g : samples_) m = std::max(m, std::abs(g));
  return m;
}

Complex CavityPool::mean() const {
  Complex s = 0.0;
  for (const Complex& g : samples_) s += g;
  return s / static_cast<double>(samples_.size());
}

double CavityPool::mean_minus_log_abs() const {
  double s = 0.0;
  for (const Complex& g : samples_) s -= std::log(std::abs(g));
  return s / static_cast<double>(samples_.size());
}

CavityEstimate estimate_lyapunov(const CavityParams& params, const EtaProtocol& protocol,
                                 const McBudget& mc, RngHandle rng) {
  validate_protocol(protocol);
  CavityParams p = params;
  p.z = HalfPlanePoint(params.z.energy, protocol.etas.front());
  CavityPool pool(p, mc.n_pool, derive(rng, {0}));

  std::vector<std::array<double, 3>> trace;
  for (double eta : protocol.etas) {
    pool.set_z(HalfPlanePoint(params.z.energy, eta));
    std::vector<double> xs = measure_sweeps_checked(
        pool, mc, "lyapunov", [](CavityPool& p) { return p.mean_minus_log_abs(); });
    BatchStats bs = batch_means(xs, mc.n_batches);
    trace.push_back({eta, bs.value, bs.se});
  }
  return extrapolate_eta(trace, mc.n_pool * mc.measure_sweeps);
}

namespace {

// One phi sample: s * sum of log|Gamma| along a path of the given length.
// Each path vertex takes K-1 off-path pool draws plus the on-path descendant
// (the deepest vertex draws its descendant from the pool as well).
double path_log_product(const CavityPool& pool, Stream& rs, int path_length, double s) {
  const CavityParams& p = pool.params();
  const int K = p.tree.branching;
  const Complex z = p.z.value();
  Complex gchain = pool.samples()[rs.index(pool.samples().size())];
  double logsum = 0.0;
  for (int k = 0; k < path_length; ++k) {
    Complex sum = gchain;
    for (int j = 0; j < K - 1; ++j)
      sum += pool.samples()[rs.index(pool.samples().size())];
    double w = p.disorder.sample(rs);
    gchain = 1.0 / (p.lambda * w - z - sum);
    logsum += std::log(std::abs(gchain));
  }
  return s * logsum;
}

double logsumexp(std::vector<double>::const_iterator b, std::vector<double>::const_iterator e) {
  double m = *std::max_element(b, e);
  double s = 0.0;
  for (auto it = b; it != e; ++it) s += std::exp(*it - m);
  return m + std::log(s);
}

struct PhiAtEta {
  double value;
  double se;
  bool heavy_tail;
};

PhiAtEta phi_from_replicas(std::vector<double>& logs, int n_groups, int path_length) {
  const std::size_t n = logs.size();
  n_groups = std::max(2, n_groups);
  const std::size_t m = n / n_groups;
  std::vector<double> group_phi(n_groups);
  for (int g = 0; g < n_groups; ++g) {
    auto b = logs.cbegin() + g * m;
    auto e = (g == n_groups - 1) ? logs.cend() : b + m;
    double cnt = static_cast<double>(e - b);
    group_phi[g] = (logsumexp(b, e) - std::log(cnt)) / path_length;
  }
  std::vector<double> sorted = group_phi;
  std::sort(sorted.begin(), sorted.end());
  double median = 0.5 * (sorted[(n_groups - 1) / 2] + sorted[n_groups / 2]);
  double mean = std::accumulate(group_phi.begin(), group_phi.end(), 0.0) / n_groups;
  double var = 0.0;
  for (double g : group_phi) var += (g - mean) * (g - mean);
  var /= std::max(1, n_groups - 1);
  // 1.2533 = sqrt(pi/2): efficiency of the median as a location estimate.
  double se = 1.2533 * std::sqrt(var / n_groups);

  // Heavy-tail flag: top 1% of replicas carrying more than half the mean.
  std::vector<double> desc = logs;
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  std::size_t top = std::max<std::size_t>(1, n / 100);
  double lse_top = logsumexp(desc.cbegin(), desc.cbegin() + top);
  double lse_all = logsumexp(desc.cbegin(), desc.cend());
  bool heavy = lse_top > lse_all - std::log(2.0);
  return {median, se, heavy};
}

}  // namespace

CavityEstimate estimate_free_energy(const CavityParams& params, double s, int path_length,
                                    const EtaProtocol& protocol, const McBudget& mc,
                                    RngHandle rng) {
  if (!(s > 0.0 && s < 1.0))
    throw std::domain_error("estimate_free_energy: s must be in (0,1)");
  if (path_length < 10) throw ConfigError("estimate_free_energy: path length >= 10");
  validate_protocol(protocol);

  CavityParams p = params;
  p.z = HalfPlanePoint(params.z.energy, protocol.etas.front());
  CavityPool pool(p, mc.n_pool, derive(rng, {0}));
  Stream paths(derive(rng, {1}));

  bool heavy = false;
  std::vector<std::array<double, 3>> trace;
  for (double eta : protocol.etas) {
    pool.set_z(HalfPlanePoint(params.z.energy, eta));
    pool.sweep(mc.burn_in_sweeps);
    std::vector<double> logs(mc.n_replicas);
    for (double& lg : logs) lg = path_log_product(pool, paths, path_length, s);
    PhiAtEta at = phi_from_replicas(logs, mc.n_groups, path_length);
    heavy = heavy || at.heavy_tail;
    trace.push_back({eta, at.value, at.se});
  }
  CavityEstimate est = extrapolate_eta(trace, mc.n_replicas);
  est.heavy_tail_warning = heavy;
  return est;
}

CavityEstimate estimate_phi_at_one(const CavityParams& params, int path_length,
                                   const EtaProtocol& protocol, const McBudget& mc,
                                   RngHandle rng) {
  const std::vector<double> s_grid{0.7, 0.8, 0.9, 0.95};
  std::vector<double> vals, ses;
  bool heavy = false;
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    CavityEstimate e = estimate_free_energy(params, s_grid[i], path_length, protocol, mc,
                                            derive(rng, {10 + i}));
    vals.push_back(e.value);
    ses.push_back(e.std_error);
    heavy = heavy || e.heavy_tail_warning;
  }
  // phi is monotone decreasing in s; an increase beyond error bars means the
  // estimates are inconsistent.
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] > vals[i - 1] + 2.0 * (ses[i] + ses[i - 1]) + 1e-12) {
      std::ostringstream os;
      os << "phi(s) increased from s=" << s_grid[i - 1] << " to s=" << s_grid[i] << " ("
         << vals[i - 1] << " -> " << vals[i] << ") beyond error bars";
      throw ConvergenceError(os.str());
    }
  }
  // Linear-in-s fit of the last three points, evaluated at s = 1.
  std::vector<double> xs(s_grid.end() - 3, s_grid.end());
  std::vector<double> ys(vals.end() - 3, vals.end());
  std::vector<double> ss(ses.end() - 3, ses.end());
  LinearFit fit = fit_line_weighted(xs, ys, ss);
  CavityEstimate est;
  est.value = fit.intercept + fit.slope;
  double w = 0.0, wx = 0.0, wxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double wi = 1.0 / std::max(ss[i] * ss[i], 1e-24);
    w += wi;
    wx += wi * xs[i];
    wxx += wi * xs[i] * xs[i];
  }
  double det = w * wxx - wx * wx;
  // Var(a + b) at x* = 1 from the WLS covariance.
  double var = (wxx - 2.0 * wx + w) / det;
  est.std_error = std::sqrt(std::max(0.0, var));
  est.heavy_tail_warning = heavy;
  est.extrapolation_dominated =
      est.std_error > *std::max_element(ss.begin(), ss.end());
  est.n_effective = mc.n_replicas * s_grid.size();
  for (std::size_t i = 0; i < s_grid.size(); ++i)
    est.trace.push_back({s_grid[i], vals[i], ses[i]});
  return est;
}

CavityEstimate estimate_dos(const CavityParams& params, const EtaProtocol& protocol,
                            const McBudget& mc, RngHandle rng) {
  validate_protocol(protocol);
  constexpr double kPi = 3.14159265358979323846264338328;
  CavityParams p = params;
  p.z = HalfPlanePoint(params.z.energy, protocol.etas.front());
  CavityPool pool(p, mc.n_pool, derive(rng, {0}));
  Stream meas(derive(rng, {1}));
  const int Kp1 = params.tree.coordination();

  std::vector<std::array<double, 3>> trace;
  for (double eta : protocol.etas) {
    const Complex z = Complex(params.z.energy, eta);
    pool.set_z(HalfPlanePoint(params.z.energy, eta));
    std::vector<double> xs =
        measure_sweeps_checked(pool, mc, "dos", [&](CavityPool& p) {
          double acc = 0.0;
          const std::size_t n = p.samples().size();
          for (std::size_t i = 0; i < n; ++i) {
            Complex sum = 0.0;
            for (int j = 0; j < Kp1; ++j) sum += p.samples()[meas.index(n)];
            double w = params.disorder.sample(meas);
            Complex G = 1.0 / (params.lambda * w - z - sum);
            acc += G.imag();
          }
          return acc / (kPi * static_cast<double>(n));
        });
    BatchStats bs = batch_means(xs, mc.n_batches);
    trace.push_back({eta, bs.value, bs.se});
  }
  return extrapolate_eta(trace, mc.n_pool * mc.measure_sweeps);
}

IdsEstimate estimate_ids(const CavityParams& params, double E, const EtaProtocol& protocol,
                         const McBudget& mc, const IdsOptions& opts, RngHandle rng) {
  double lo = opts.lower_cutoff;
  if (lo == 0.0) {
    auto edges = spectrum_edges(params.tree, params.lambda, params.disorder);
    double band = 2.0 * std::sqrt(static_cast<double>(params.tree.branching));
    lo = edges ? edges->lo - 0.1 : -band - std::max(6.0 * params.lambda, 3.0);
  }
  IdsEstimate out;
  if (E <= lo) return out;
  int n = std::max(5, opts.n_points | 1);  // odd count
  std::vector<double> dos(n), se(n);
  double h = (E - lo) / (n - 1);
  for (int i = 0; i < n; ++i) {
    CavityParams p = params;
    p.z = HalfPlanePoint(lo + i * h, params.z.eta);
    CavityEstimate e = estimate_dos(p, protocol, mc, derive(rng, {static_cast<std::uint64_t>(i)}));
    dos[i] = e.value;
    se[i] = e.std_error;
  }
  auto trapz = [&](int stride) {
    double s = 0.0;
    for (int i = 0; i + stride < n; i += stride)
      s += 0.5 * (dos[i] + dos[i + stride]) * (stride * h);
    return s;
  };
  out.value = trapz(1);
  double coarse = trapz(2);
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    var += w * w * se[i] * se[i];
  }
  out.std_error = std::sqrt(var);
  if (out.value > 1e-12 &&
      std::abs(out.value - coarse) / std::max(out.value, 1e-12) > 0.10)
    out.accuracy_warning = true;
  return out;
}

std::vector<CavityEstimate> estimate_greens_second_moment(
    const CavityParams& params, const std::vector<int>& distances, const McBudget& mc,
    RngHandle rng) {
  if (!(params.z.eta > 0.0))
    throw ConfigError("greens_second_moment: eta must be > 0");
  CavityPool pool(params, mc.n_pool, derive(rng, {0}));
  pool.sweep(mc.burn_in_sweeps);
  Stream paths(derive(rng, {1}));
  const int K = params.tree.branching;
  const Complex z = params.z.value();
  const std::size_t n = pool.samples().size();

  std::vector<CavityEstimate> out;
  for (int d : distances) {
    if (d < 0) throw ConfigError("greens_second_moment: distance must be >= 0");
    std::vector<double> vals(mc.n_replicas);
    for (double& v : vals) {
      // Chain from the far end: Gamma at the endpoint takes K pool draws,
      // interior vertices K-1 plus the on-path descendant, and the root
      // diagonal takes K off-path pool draws plus the on-path child.
      Complex prod = 1.0;
      Complex gchain = 0.0;
      for (int k = d; k >= 1; --k) {
        Complex sum = (k == d) ? Complex(0.0) : gchain;
        int off = (k == d) ? K : K - 1;
        for (int j = 0; j < off; ++j) sum += pool.samples()[paths.index(n)];
        double w = params.disorder.sample(paths);
        gchain = 1.0 / (params.lambda * w - z - sum);
        prod *= gchain;
      }
      Complex sum = (d > 0) ? gchain : Complex(0.0);
      int off = (d > 0) ? K : K + 1;
      for (int j = 0; j < off; ++j) sum += pool.samples()[paths.index(n)];
      double w = params.disorder.sample(paths);
      Complex g00 = 1.0 / (params.lambda * w - z - sum);
      double mag = std::abs(g00 * prod);
      v = mag * mag;
    }
    BatchStats bs = batch_means(vals, mc.n_groups);
    CavityEstimate est;
    est.value = bs.value;
    est.std_error = bs.se;
    est.eta = params.z.eta;
    est.n_effective = mc.n_replicas;
    std::vector<double> desc = vals;
    std::sort(desc.begin(), desc.end(), std::greater<double>());
    std::size_t top = std::max<std::size_t>(1, desc.size() / 100);
    double top_sum = std::accumulate(desc.begin(), desc.begin() + top, 0.0);
    double all_sum = std::accumulate(desc.begin(), desc.end(), 0.0);
    est.heavy_tail_warning = all_sum > 0.0 && top_sum > 0.5 * all_sum;
    out.push_back(std::move(est));
  }
  return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> se(x.size(), 1.0);
  LinearFit f = fit_line_weighted(x, y, se);
  // Unweighted: rescale parameter errors by residual variance.
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    double s2 = rss / (x.size() - 2);
    f.se_intercept *= std::sqrt(s2);
    f.se_slope *= std::sqrt(s2);
  }
  return f;
}

LinearFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& se) {
  if (x.size() != y.size() || x.size() != se.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 points of equal length");
  double w = 0.0, wx = 0.0, wy = 0.0, wxx = 0.0, wxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double wi = 1.0 / std::max(se[i] * se[i], 1e-24);
    w += wi;
    wx += wi * x[i];
    wy += wi * y[i];
    wxx += wi * x[i] * x[i];
    wxy += wi * x[i] * y[i];
  }
  double det = w * wxx - wx * wx;
  LinearFit f;
  f.slope = (w * wxy - wx * wy) / det;
  f.intercept = (wxx * wy - wx * wxy) / det;
  f.se_slope = std::sqrt(std::max(0.0, w / det));
  f.se_intercept = std::sqrt(std::max(0.0, wxx / det));
  return f;
}

}  // namespace bethe
