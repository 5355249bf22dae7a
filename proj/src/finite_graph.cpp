#include "bethe/finite_graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bethe {

namespace {

void finalize_adjacency(FiniteGraph& g) {
  g.adjacency.assign(g.n_vertices, {});
  for (auto [a, b] : g.edges) {
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
}

}  // namespace

FiniteGraph build_truncated_tree(TreeParams tp, int L, TreeFlavor flavor) {
  if (L < 0) throw ConfigError("build_truncated_tree: L must be >= 0");
  const int K = tp.branching;

  // Closed-form sizes, with an overflow guard at 10^7 vertices.
  double n_exact = 1.0;
  double shell = (flavor == TreeFlavor::Rooted) ? K : K + 1;
  for (int l = 1; l <= L; ++l) {
    n_exact += shell;
    shell *= K;
  }
  if (n_exact > 1e7) throw ResourceError("build_truncated_tree: more than 10^7 vertices");

  FiniteGraph g;
  g.kind = GraphKind::TruncatedTree;
  g.branching = K;
  g.depth = L;
  g.flavor = flavor;

  g.parent.push_back(-1);
  g.distance_from_root.push_back(0);
  std::vector<int> frontier{0};
  for (int l = 1; l <= L; ++l) {
    std::vector<int> next;
    for (int u : frontier) {
      int n_children = (u == 0 && flavor == TreeFlavor::Ball) ? K + 1 : K;
      for (int c = 0; c < n_children; ++c) {
        int v = static_cast<int>(g.parent.size());
        g.parent.push_back(u);
        g.distance_from_root.push_back(l);
        g.edges.emplace_back(u, v);
        next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  g.n_vertices = g.parent.size();
  finalize_adjacency(g);
  return g;
}

FiniteGraph build_random_regular(TreeParams tp, int n, RngHandle rng) {
  const int deg = tp.coordination();
  if (n <= deg) throw ConfigError("build_random_regular: need N > K+1");
  if ((static_cast<long>(n) * deg) % 2 != 0)
    throw ConfigError("build_random_regular: N*(K+1) must be even");

  Stream rs(rng);
  const int max_restarts = 10000;
  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(n) * deg);
    for (int v = 0; v < n; ++v)
      for (int d = 0; d < deg; ++d) stubs.push_back(v);
    // Fisher-Yates, then pair consecutive stubs.
    for (std::size_t i = stubs.size() - 1; i > 0; --i)
      std::swap(stubs[i], stubs[rs.index(i + 1)]);

    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> adj(n);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < stubs.size() && ok; i += 2) {
      int a = stubs[i], b = stubs[i + 1];
      if (a == b) ok = false;
      if (ok && std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end()) ok = false;
      if (ok) {
        adj[a].push_back(b);
        adj[b].push_back(a);
        edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
    if (!ok) continue;

    FiniteGraph g;
    g.kind = GraphKind::RandomRegular;
    g.branching = tp.branching;
    g.seed = rng.key;
    g.n_vertices = static_cast<std::size_t>(n);
    g.edges = std::move(edges);
    g.adjacency = std::move(adj);
    // BFS distances from vertex 0 (used by transport probes).
    g.distance_from_root.assign(n, -1);
    std::vector<int> q{0};
    g.distance_from_root[0] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
      int u = q[h];
      for (int v : g.adjacency[u])
        if (g.distance_from_root[v] < 0) {
          g.distance_from_root[v] = g.distance_from_root[u] + 1;
          q.push_back(v);
        }
    }
    return g;
  }
  throw ConvergenceError("build_random_regular: pairing failed after max restarts");
}

DisorderRealization make_realization(const FiniteGraph& g, const DisorderSpec& disorder,
                                     double lambda, RngHandle rng) {
  DisorderRealization r;
  r.lambda = lambda;
  r.seed = rng.key;
  r.potential.resize(g.n_vertices);
  Stream rs(rng);
  for (double& w : r.potential) w = disorder.sample(rs);
  return r;
}

Eigen::MatrixXd assemble_hamiltonian(const FiniteGraph& g, const DisorderRealization& r) {
  if (r.potential.size() != g.n_vertices)
    throw ConfigError("assemble_hamiltonian: potential length mismatch");
  const auto n = static_cast<Eigen::Index>(g.n_vertices);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (auto [a, b] : g.edges) {
    H(a, b) = -1.0;
    H(b, a) = -1.0;
  }
  for (Eigen::Index v = 0; v < n; ++v) H(v, v) = r.lambda * r.potential[v];
  return H;
}

TreeResolvent exact_resolvent_root(const FiniteGraph& g, const DisorderRealization& r,
                                   HalfPlanePoint z) {
  if (!g.is_tree()) throw ConfigError("exact_resolvent_root: graph must be a tree");
  if (!(z.eta > 0.0)) throw ConfigError("exact_resolvent_root: eta must be > 0");
  const Complex zz = z.value();
  const std::size_t n = g.n_vertices;

  TreeResolvent out;
  out.gamma.assign(n, Complex(0.0));
  out.green0.assign(n, Complex(0.0));

  // Vertices were created in BFS order, so a reverse pass is leaf-to-root.
  std::vector<Complex> child_sum(n, Complex(0.0));
  for (std::size_t i = n; i-- > 0;) {
    out.gamma[i] = 1.0 / (r.lambda * r.potential[i] - zz - child_sum[i]);
    if (g.parent[i] >= 0) child_sum[g.parent[i]] += out.gamma[i];
  }
  out.g00 = out.gamma[0];
  // G(0, x) = Gamma(0) * prod of Gamma along the path (hopping -1 gives unit
  // edge factors).
  out.green0[0] = out.gamma[0];
  for (std::size_t i = 1; i < n; ++i)
    out.green0[i] = out.green0[g.parent[i]] * out.gamma[i];
  return out;
}

ImPropagation check_im_propagation(const FiniteGraph& g, const DisorderRealization& r,
                                   HalfPlanePoint z, int R) {
  if (R < 1 || R > g.depth) throw ConfigError("check_im_propagation: R out of range");
  TreeResolvent res = exact_resolvent_root(g, r, z);
  ImPropagation out{res.g00.imag(), 0.0};
  for (std::size_t i = 0; i < g.n_vertices; ++i) {
    if (g.distance_from_root[i] != R) continue;
    double amp = std::abs(res.green0[g.parent[i]]);
    out.rhs += amp * amp * res.gamma[i].imag();
  }
  return out;
}

ResonanceCount resonance_count(const FiniteGraph& g, const DisorderRealization& r,
                               double E, double eta, double delta, int R) {
  if (R < 0 || R > g.depth) throw ConfigError("resonance_count: R out of range");
  TreeResolvent res = exact_resolvent_root(g, r, HalfPlanePoint(E, eta));
  ResonanceCount out;
  out.threshold = std::exp(delta * R);
  for (std::size_t i = 0; i < g.n_vertices; ++i)
    if (g.distance_from_root[i] == R && std::abs(res.green0[i]) >= out.threshold)
      ++out.n_resonant;
  return out;
}

SpectralDecomposition diagonalize(const Eigen::MatrixXd& H, bool with_vectors,
                                  std::size_t dense_cap) {
  if (static_cast<std::size_t>(H.rows()) > dense_cap)
    throw ResourceError("diagonalize: vertex count exceeds dense cap; "
                        "use statistics-only / resolvent operations");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      H, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("diagonalize: eigensolver failed");
  SpectralDecomposition d;
  d.eigenvalues = solver.eigenvalues();
  if (with_vectors) d.eigenvectors = solver.eigenvectors();
  return d;
}

namespace {

// Indices of eigenvalues inside the window; throws when empty.
std::vector<Eigen::Index> window_indices(const SpectralDecomposition& d, Interval w) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i)
    if (w.contains(d.eigenvalues[i])) idx.push_back(i);
  if (idx.empty()) throw std::domain_error("empty spectral window");
  return idx;
}

}  // namespace

namespace {

// |<delta_x, e^{-itH} P_I delta_0>|^2 for all x, via two real matvecs.
Eigen::VectorXd window_amplitude_sq(const Eigen::MatrixXd& V,
                                    const Eigen::VectorXd& evals,
                                    const std::vector<Eigen::Index>& idx, double t) {
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd cre(m), cim(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double c = V(0, idx[j]);
    double phase = -t * evals[idx[j]];
    cre[j] = c * std::cos(phase);
    cim[j] = c * std::sin(phase);
  }
  Eigen::MatrixXd Vw(V.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) Vw.col(j) = V.col(idx[j]);
  Eigen::VectorXd re = Vw * cre;
  Eigen::VectorXd im = Vw * cim;
  return re.array().square() + im.array().square();
}

}  // namespace

std::vector<double> evolve_second_moment(const FiniteGraph& g,
                                         const SpectralDecomposition& d,
                                         Interval energy_window,
                                         const std::vector<double>& times) {
  if (d.eigenvectors.size() == 0)
    throw ConfigError("evolve_second_moment: eigenvectors required");
  auto idx = window_indices(d, energy_window);
  const Eigen::Index n = d.eigenvalues.size();
  Eigen::VectorXd dist2(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    double dist = g.distance_from_root[x];
    dist2[x] = dist * dist;
  }
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    Eigen::VectorXd p = window_amplitude_sq(d.eigenvectors, d.eigenvalues, idx, t);
    out.push_back(dist2.dot(p));
  }
  return out;
}

std::vector<double> dynamical_localization_profile(const FiniteGraph& g,
                                                   const SpectralDecomposition& d,
                                                   Interval energy_window,
                                                   const std::vector<int>& radii,
                                                   double t_max, double t_step) {
  if (d.eigenvectors.size() == 0)
    throw ConfigError("dynamical_localization_profile: eigenvectors required");
  auto idx = window_indices(d, energy_window);
  const Eigen::Index n = d.eigenvalues.size();

  // Start from the infinite-time (Cesaro) value, which is spectral-exact,
  // then take the max over the time grid.
  Eigen::VectorXd sup = Eigen::VectorXd::Zero(n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index i : idx) {
      double a = d.eigenvectors(x, i) * d.eigenvectors(0, i);
      sup[x] += a * a;
    }
  for (double t = 0.0; t <= t_max + 1e-12; t += t_step) {
    Eigen::VectorXd p = window_amplitude_sq(d.eigenvectors, d.eigenvalues, idx, t);
    sup = sup.cwiseMax(p);
  }
  std::vector<double> out;
  for (int R : radii) {
    double s = 0.0;
    for (Eigen::Index x = 0; x < n; ++x)
      if (g.distance_from_root[x] == R) s += sup[x];
    out.push_back(s);
  }
  return out;
}

void export_graph_csv(const FiniteGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("export_graph_csv: cannot open " + path);
  const char* kind = g.kind == GraphKind::TruncatedTree ? "tree"
                     : g.kind == GraphKind::RandomRegular ? "rrg"
                                                          : "custom";
  out << "# kind=" << kind << " K=" << g.branching;
  if (g.kind == GraphKind::TruncatedTree)
    out << " L=" << g.depth
        << " flavor=" << (g.flavor == TreeFlavor::Rooted ? "rooted" : "ball");
  else
    out << " N=" << g.n_vertices << " seed=" << g.seed;
  out << "\n";
  for (auto [a, b] : g.edges) out << a << "," << b << "\n";
}

FiniteGraph import_graph_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("import_graph_csv: cannot open " + path);
  FiniteGraph g;
  g.kind = GraphKind::Custom;
  std::string line;
  int max_v = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // Header: "# kind=... K=... (L=... flavor=... | N=... seed=...)".
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "kind")
          g.kind = val == "tree" ? GraphKind::TruncatedTree
                   : val == "rrg" ? GraphKind::RandomRegular
                                  : GraphKind::Custom;
        else if (key == "K")
          g.branching = std::stoi(val);
        else if (key == "L")
          g.depth = std::stoi(val);
        else if (key == "flavor")
          g.flavor = val == "ball" ? TreeFlavor::Ball : TreeFlavor::Rooted;
        else if (key == "seed")
          g.seed = std::stoull(val);
      }
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int a, b;
    if (ls >> a >> b) {
      g.edges.emplace_back(a, b);
      max_v = std::max({max_v, a, b});
    }
  }
  g.n_vertices = static_cast<std::size_t>(max_v + 1);
  finalize_adjacency(g);
  return g;
}

}  // namespace bethe
