#pragma once

// Discrete closed manifolds: connected weighted graphs with strictly positive
// vertex masses standing in for (M, g).  The mass weights define the inner
// product <u,v> = sum_x mass(x) u(x) v(x) and the Laplacian is the Markov
// generator (L u)_i = sum_j c_ij (u_i - u_j), so L 1 = 0 holds with exact
// zeros in the edge-list form.

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace fraclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Edge {
  int i = 0;
  int j = 0;
  double conductance = 1.0;
  double length = 1.0;
};

struct DiscreteManifold {
  int n_vertices = 0;
  int dimension_hint = 2;  // used only by Weyl / sup-norm diagnostics
  Vec mass;
  std::vector<Edge> edges;

  /// (L u)_i = sum over incident edges of c (u_i - u_j); exact zeros where
  /// u is locally constant.
  Vec apply_laplacian(const Vec& u) const;

  /// M^{-1} L u, the positive discrete -Delta.
  Vec apply_minus_delta(const Vec& u) const;

  Mat dense_laplacian() const;

  double mass_inner(const Vec& u, const Vec& v) const;
  double mass_norm(const Vec& u) const;
  double total_mass() const;

  /// neighbors[i] = list of (j, conductance)
  std::vector<std::vector<std::pair<int, double>>> adjacency() const;

  /// Throws std::invalid_argument on nonpositive mass/conductance, bad edge
  /// indices, duplicate edges, or a disconnected graph.
  void validate() const;

  /// FNV-1a hash of the serialized manifold, hex string.  Used to tie data
  /// sets to the geometry that produced them.
  std::string content_hash() const;
};

struct ObservationSet {
  std::vector<int> vertex_indices;  // sorted, deduplicated

  explicit ObservationSet(std::vector<int> idx = {});

  int size() const { return static_cast<int>(vertex_indices.size()); }
  bool contains(int v) const;
  std::vector<int> complement(int n_vertices) const;
  /// Throws unless nonempty with nonempty complement and valid indices.
  void validate(const DiscreteManifold& m) const;
};

// ---- builders -------------------------------------------------------------

/// Product-of-cycles grid with unit masses and nearest-neighbor conductances.
/// Eigenvalues are sums of per-axis values 2 - 2 cos(2 pi j / N).
DiscreteManifold build_flat_torus(const std::vector<int>& side_lengths,
                                  double conductance = 1.0);

/// Single cycle C_n (test rig; dimension_hint 1).
DiscreteManifold build_cycle(int n, double conductance = 1.0);

/// Ring of `ring_size` observed vertices with two identical limbs of
/// `limb_size` vertices each joining ring vertex 0 to ring vertex ring_size/2.
/// Swapping the limbs is a graph automorphism fixing the ring pointwise.
DiscreteManifold build_twin_limb(int ring_size, int limb_size,
                                 double conductance = 1.0);

/// Scales masses and conductances by smooth positive fields built from
/// neighbor-averaged seeded noise; preserves symmetry and the kernel.
DiscreteManifold perturb_metric(const DiscreteManifold& m, std::uint64_t seed,
                                double amplitude);

// ---- metric structure ------------------------------------------------------

/// All-pairs shortest path distances (Dijkstra per source, edge lengths
/// default 1).  Throws naming unreachable vertices if disconnected.
Mat distance_matrix(const DiscreteManifold& m);

/// Vertices q with dist(p,q) >= max_q' dist(p,q') - tie_tolerance.
std::vector<int> antipodal_set(const DiscreteManifold& m, int p,
                               double tie_tolerance);
std::vector<int> antipodal_set(const Mat& dist, int p, double tie_tolerance);

/// S plus all vertices within graph distance <= hops (unit hop metric).
std::vector<int> enlarge(const DiscreteManifold& m, const std::vector<int>& S,
                         int hops);

/// Vertices within shortest-path distance <= radius of center.
ObservationSet ball(const DiscreteManifold& m, int center, double radius);

/// Empty string if perm is a mass/conductance preserving automorphism,
/// otherwise a description of the first violation.
std::string automorphism_violation(const DiscreteManifold& m,
                                   const std::vector<int>& perm);

// ---- serialization ---------------------------------------------------------

// Plain-text format:
//   vertices N dim n
//   mass i w           (one line per vertex)
//   edge i j c [len]   (one line per edge)
void save_manifold(std::ostream& os, const DiscreteManifold& m);
DiscreteManifold load_manifold(std::istream& is);

std::string format_index_list(const std::vector<int>& idx);
std::vector<int> parse_index_list(const std::string& text);

}  // namespace fraclab
