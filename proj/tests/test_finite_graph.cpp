#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "bethe/exact_forms.hpp"
#include "bethe/finite_graph.hpp"

using namespace bethe;

TEST_CASE("truncated tree vertex counts and degrees") {
  // Rooted T_L: (K^{L+1} - 1) / (K - 1).
  FiniteGraph t = build_truncated_tree(TreeParams(2), 4, TreeFlavor::Rooted);
  CHECK(t.n_vertices == 31);
  // Ball of radius L: 1 + (K+1)(K^L - 1)/(K - 1).
  FiniteGraph b = build_truncated_tree(TreeParams(2), 4, TreeFlavor::Ball);
  CHECK(b.n_vertices == 1 + 3 * 15);
  for (const FiniteGraph* g : {&t, &b}) {
    CHECK(g->edges.size() == g->n_vertices - 1);  // acyclic and connected
    for (std::size_t v = 0; v < g->n_vertices; ++v)
      CHECK(g->adjacency[v].size() <= 3);
  }
  CHECK(t.adjacency[0].size() == 2);
  CHECK(b.adjacency[0].size() == 3);
  CHECK(t.parent[0] == -1);
  CHECK(t.distance_from_root[0] == 0);
  CHECK(*std::max_element(t.distance_from_root.begin(), t.distance_from_root.end()) == 4);
}

TEST_CASE("tree resolvent equals the dense linear solve") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 5, TreeFlavor::Ball);
  DisorderRealization r =
      make_realization(g, DisorderSpec::gaussian(), 0.8, RngHandle::root(13));
  HalfPlanePoint z(0.7, 0.03);
  TreeResolvent res = exact_resolvent_root(g, r, z);

  Eigen::MatrixXcd A = assemble_hamiltonian(g, r).cast<Complex>();
  for (std::size_t i = 0; i < g.n_vertices; ++i) A(i, i) -= z.value();
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(g.n_vertices);
  e0(0) = 1.0;
  Eigen::VectorXcd col = A.fullPivLu().solve(e0);
  for (std::size_t i = 0; i < g.n_vertices; ++i)
    CHECK(std::abs(col(i) - res.green0[i]) < 1e-10);
  CHECK(std::abs(res.g00 - res.green0[0]) < 1e-14);
  // Herglotz at the root.
  CHECK(res.g00.imag() > 0.0);
}

TEST_CASE("free tree resolvent approaches gamma0 deep inside") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 14, TreeFlavor::Rooted);
  DisorderRealization r = make_realization(g, DisorderSpec::uniform(), 0.0, RngHandle::root(1));
  HalfPlanePoint z(0.5, 1.0);
  TreeResolvent res = exact_resolvent_root(g, r, z);
  Complex limit = gamma0(TreeParams(2), z);
  CHECK(std::abs(res.gamma[0] - limit) < 1e-3);
}

TEST_CASE("Im propagation inequality holds on random realizations") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 6, TreeFlavor::Rooted);
  for (int rep = 0; rep < 20; ++rep) {
    DisorderRealization r =
        make_realization(g, DisorderSpec::cauchy(), 1.0, derive(RngHandle::root(99), {0, std::uint64_t(rep)}));
    for (int R : {2, 4}) {
      ImPropagation ip = check_im_propagation(g, r, HalfPlanePoint(0.3, 0.01), R);
      CHECK(ip.lhs >= ip.rhs - 1e-12);
      CHECK(ip.rhs > 0.0);
    }
  }
}

TEST_CASE("resonance counting threshold semantics") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 4, TreeFlavor::Rooted);
  DisorderRealization r = make_realization(g, DisorderSpec::uniform(), 0.0, RngHandle::root(1));
  // delta -> -inf counts every sphere vertex; huge delta counts none.
  ResonanceCount all = resonance_count(g, r, 0.5, 1e-6, -10.0, 3);
  CHECK(all.n_resonant == 8);  // K^R vertices on sphere R=3
  ResonanceCount none = resonance_count(g, r, 0.5, 1e-6, 10.0, 3);
  CHECK(none.n_resonant == 0);
  CHECK(none.threshold == doctest::Approx(std::exp(30.0)));
}

TEST_CASE("random regular graphs are simple and (K+1)-regular") {
  for (int n : {50, 200}) {
    FiniteGraph g = build_random_regular(TreeParams(2), n, RngHandle::root(7));
    CHECK(g.n_vertices == std::size_t(n));
    CHECK(g.edges.size() == std::size_t(3 * n / 2));
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : g.edges) {
      CHECK(a != b);  // no self loops
      auto key = std::minmax(a, b);
      CHECK(seen.insert({key.first, key.second}).second);  // no multi-edges
    }
    for (int v = 0; v < n; ++v) CHECK(g.adjacency[v].size() == 3);
  }
  CHECK_THROWS_AS(build_random_regular(TreeParams(2), 51, RngHandle::root(1)), ConfigError);
  // Deterministic in the seed.
  FiniteGraph a = build_random_regular(TreeParams(2), 100, RngHandle::root(5));
  FiniteGraph b = build_random_regular(TreeParams(2), 100, RngHandle::root(5));
  CHECK(a.edges == b.edges);
}

TEST_CASE("diagonalize matches Eigen's solver contract and the cap") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 3, TreeFlavor::Rooted);
  DisorderRealization r = make_realization(g, DisorderSpec::gaussian(), 0.5, RngHandle::root(2));
  Eigen::MatrixXd H = assemble_hamiltonian(g, r);
  SpectralDecomposition d = diagonalize(H);
  REQUIRE(d.eigenvalues.size() == int(g.n_vertices));
  for (int i = 1; i < d.eigenvalues.size(); ++i)
    CHECK(d.eigenvalues(i) >= d.eigenvalues(i - 1));
  // Residual check H v = e v.
  for (int i = 0; i < d.eigenvalues.size(); ++i) {
    Eigen::VectorXd res = H * d.eigenvectors.col(i) - d.eigenvalues(i) * d.eigenvectors.col(i);
    CHECK(res.norm() < 1e-10);
  }
  CHECK_THROWS_AS(diagonalize(H, true, 5), ResourceError);
  SpectralDecomposition vals_only = diagonalize(H, false);
  CHECK(vals_only.eigenvectors.size() == 0);
}

TEST_CASE("second moment time evolution sanity") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 5, TreeFlavor::Ball);
  DisorderRealization r = make_realization(g, DisorderSpec::uniform(), 0.0, RngHandle::root(3));
  SpectralDecomposition d = diagonalize(assemble_hamiltonian(g, r));
  Interval window{-10.0, 10.0};
  std::vector<double> m2 = evolve_second_moment(g, d, window, {0.0, 0.5, 1.0});
  CHECK(m2[0] == doctest::Approx(0.0).epsilon(1e-12));  // starts at the root
  CHECK(m2[1] > 0.0);
  CHECK(m2[2] > m2[1]);  // free evolution spreads ballistically at short times
}

TEST_CASE("dynamical localization profile decays for strong disorder") {
  FiniteGraph g = build_truncated_tree(TreeParams(2), 5, TreeFlavor::Ball);
  DisorderRealization r = make_realization(g, DisorderSpec::uniform(), 12.0, RngHandle::root(4));
  SpectralDecomposition d = diagonalize(assemble_hamiltonian(g, r));
  std::vector<double> prof =
      dynamical_localization_profile(g, d, Interval{-1e9, 1e9}, {1, 3, 5}, 50.0, 0.5);
  REQUIRE(prof.size() == 3);
  CHECK(prof[0] > prof[2]);  // strong disorder localizes near the root
}

TEST_CASE("graph csv round trip") {
  FiniteGraph g = build_random_regular(TreeParams(2), 60, RngHandle::root(11));
  std::string path = "graph_roundtrip_test.csv";
  export_graph_csv(g, path);
  FiniteGraph h = import_graph_csv(path);
  CHECK(h.kind == g.kind);
  CHECK(h.branching == g.branching);
  CHECK(h.n_vertices == g.n_vertices);
  CHECK(h.edges == g.edges);
  std::remove(path.c_str());
}
