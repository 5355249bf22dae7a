#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bethe/disorder.hpp"
#include "bethe/rng.hpp"
#include "bethe/types.hpp"

namespace bethe {

enum class GraphKind { TruncatedTree, RandomRegular, Custom };
enum class TreeFlavor { Rooted, Ball };

struct FiniteGraph {
  GraphKind kind = GraphKind::Custom;
  int branching = 0;  // trees and RRGs: K
  int depth = -1;     // trees: L
  TreeFlavor flavor = TreeFlavor::Rooted;
  std::uint64_t seed = 0;  // RRGs: sampling seed

  std::size_t n_vertices = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> adjacency;
  std::vector<int> parent;         // trees: -1 at root
  std::vector<int> distance_from_root;

  bool is_tree() const { return kind == GraphKind::TruncatedTree; }
};

// Rooted: root has K children, every internal vertex K children, depth L.
// Ball: root has K+1 children (Bethe-lattice ball of radius L).
FiniteGraph build_truncated_tree(TreeParams K, int L, TreeFlavor flavor);

// Simple (K+1)-regular graph by the pairing model with full-restart rejection.
FiniteGraph build_random_regular(TreeParams K, int n, RngHandle rng);

// Potential realization on a graph.
struct DisorderRealization {
  std::vector<double> potential;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

DisorderRealization make_realization(const FiniteGraph& g, const DisorderSpec& disorder,
                                     double lambda, RngHandle rng);

// Dense symmetric H: -1 on edges, lambda*w on the diagonal.
Eigen::MatrixXd assemble_hamiltonian(const FiniteGraph& g, const DisorderRealization& r);

// Exact leaf-to-root recursion on a truncated tree: all forward-truncated
// Gamma(u; z) plus the root diagonal Green function (= Gamma(root)).
struct TreeResolvent {
  std::vector<Complex> gamma;    // per vertex, forward subtree
  std::vector<Complex> green0;   // G(0, x; z) for all x
  Complex g00;
};
TreeResolvent exact_resolvent_root(const FiniteGraph& g, const DisorderRealization& r,
                                   HalfPlanePoint z);

// Both sides of the Im-propagation inequality at sphere radius R:
//   Im Gamma(0) >= sum_{|x+|=R} |G(0, parent(x+))|^2 Im Gamma(x+).
struct ImPropagation {
  double lhs;
  double rhs;
};
ImPropagation check_im_propagation(const FiniteGraph& g, const DisorderRealization& r,
                                   HalfPlanePoint z, int R);

// Sphere-R count of |G(0,x; E+i eta)| >= exp(delta * R).
struct ResonanceCount {
  long n_resonant = 0;
  double threshold = 0.0;
};
ResonanceCount resonance_count(const FiniteGraph& g, const DisorderRealization& r,
                               double E, double eta, double delta, int R);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // empty when values-only
};

// Dense symmetric eigensolve; throws ResourceError above the vertex cap.
SpectralDecomposition diagonalize(const Eigen::MatrixXd& H, bool with_vectors = true,
                                  std::size_t dense_cap = 4000);

// Sum_x |x|^2 |<delta_x, e^{-itH} P_I delta_0>|^2 at the given times.
std::vector<double> evolve_second_moment(const FiniteGraph& g,
                                         const SpectralDecomposition& d,
                                         Interval energy_window,
                                         const std::vector<double>& times);

// Per-radius sum over |x| = R of sup_t |<delta_x, e^{-itH} P_I delta_0>|^2,
// the sup taken over a time grid united with the infinite-time average.
std::vector<double> dynamical_localization_profile(const FiniteGraph& g,
                                                   const SpectralDecomposition& d,
                                                   Interval energy_window,
                                                   const std::vector<int>& radii,
                                                   double t_max = 200.0,
                                                   double t_step = 0.5);

// Edge-list CSV round trip (one-line header with kind and parameters).
void export_graph_csv(const FiniteGraph& g, const std::string& path);
FiniteGraph import_graph_csv(const std::string& path);

}  // namespace bethe
