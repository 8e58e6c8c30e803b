#pragma once

// Forward fractional Schroedinger problem ((-Delta)^alpha + V) u = f:
// kernel computation, the admissible source space H^O, the canonical
// solution operator, Cauchy data generation, and the gauge obstruction
// generator.

#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace fraclab {

struct Potential {
  Vec values;

  bool vanishes_on(const ObservationSet& O, double tol = 0.0) const;
  static Potential zero(int n) { return Potential{Vec::Zero(n)}; }
  static Potential constant(int n, double v) {
    return Potential{Vec::Constant(n, v)};
  }
};

struct KernelBasis {
  int dim = 0;
  Mat columns;          // n x dim, mass-orthonormal
  Mat adjoint_columns;  // equal to columns for real V
  double sigma_below = 0.0;  // largest singular value counted into the kernel
  double sigma_above = 0.0;  // smallest singular value kept out of it
  bool gap_warning = false;  // threshold sits inside a narrow singular gap
};

struct ComplexKernelBasis {
  int dim = 0;
  Eigen::MatrixXcd columns;
  int adjoint_dim = 0;
  Eigen::MatrixXcd adjoint_columns;
};

/// ((-Delta)^alpha + V) with its symmetrized eigendecomposition attached;
/// kernel extraction and the canonical (kernel-orthogonal) solve share it.
class FracSchroedingerOp {
 public:
  FracSchroedingerOp(const SpectralDecomposition& spec, double alpha,
                     Potential V, double kernel_tol = 1e-9);

  Vec apply(const Vec& u) const;
  const KernelBasis& kernel() const { return kernel_; }
  double alpha() const { return alpha_; }
  const Potential& potential() const { return V_; }
  const SpectralDecomposition& spectral() const { return *spec_; }

  /// Unique solution of P u = f with (u, zeta) = 0 for all kernel zeta.
  /// f must satisfy the H^O orthogonality (checked); throws otherwise.
  Vec solve_canonical(const Vec& f, double membership_tol = 1e-8) const;

 private:
  const SpectralDecomposition* spec_;
  double alpha_;
  Potential V_;
  Vec sqrt_mass_, inv_sqrt_mass_;
  Vec sym_eigenvalues_;  // eigenvalues of M^{1/2} A M^{-1/2}
  Mat sym_eigenvectors_;
  double null_threshold_ = 0.0;
  KernelBasis kernel_;
};

/// SVD-thresholded nullspace of (-Delta)^alpha + V in the mass inner product.
KernelBasis kernel_basis(const SpectralDecomposition& spec, double alpha,
                         const Potential& V, double tol = 1e-9);

/// Complex-potential variant exercising the adjoint-kernel path (the paper
/// distinguishes V and conj(V); shipped experiments are real).
ComplexKernelBasis kernel_basis_complex(const SpectralDecomposition& spec,
                                        double alpha,
                                        const Eigen::VectorXcd& V,
                                        double tol = 1e-9);

/// Minimum-mass-norm h supported in O with (h, zeta_l)_{L2(O)} = c_l.
Vec hit_vector(const SpectralDecomposition& spec, const ObservationSet& O,
               const Mat& adjoint_columns, const Vec& target);

/// f supported in O projected onto H^O: f - sum_j (f, zeta_j) theta_j with
/// theta_k supported in O, (theta_k, zeta_l) = delta_kl.  Identity when the
/// kernel is trivial.
Vec admissible_projection(const SpectralDecomposition& spec,
                          const ObservationSet& O, const KernelBasis& kernel,
                          const Vec& f);

struct CauchyPair {
  Vec f_O, u_O, fracu_O;  // traces on O, in O-index order
  Vec full_f, full_u;     // private: oracle tests only
  double residual = 0.0;
  double kernel_orthogonality = 0.0;
};

struct BlindCauchyData {
  std::vector<int> O_indices;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  Vec V_on_O;
  Vec mass_on_O;
  std::string manifold_hash;
  std::vector<Vec> f_O, u_O, fracu_O;
  bool v_vanishes_on_O() const;
};

struct CauchyDataSet {
  ObservationSet O;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  Vec V_on_O;
  std::string manifold_hash;
  std::vector<CauchyPair> pairs;

  BlindCauchyData blind(const DiscreteManifold& m) const;
};

/// Squared-cosine bump centered at `center` of the given hop radius, clipped
/// to O (sources mirror C_0^infty(O)).
Vec bump_source(const DiscreteManifold& m, const Mat& dist,
                const ObservationSet& O, int center, double radius);

/// n_sources seeded random bumps in O, projected to H^O, solved canonically,
/// traced on O.  Requires V recorded on O (pipeline stages need V|_O = 0).
CauchyDataSet cauchy_generate(const DiscreteManifold& m,
                              const FracSchroedingerOp& op,
                              const ObservationSet& O, int n_sources,
                              std::uint64_t seed);

/// Relabels (m, V) by a permutation `perm` that must be an automorphism of m
/// fixing O pointwise; the resulting pair generates identical Cauchy data.
std::pair<DiscreteManifold, Potential> gauge_pullback(
    const DiscreteManifold& m, const Potential& V,
    const std::vector<int>& perm, const ObservationSet& O);

struct DensityWitnessReport {
  // per (cluster, basis column): best |(S(f), phi)| seen and whether it
  // cleared the threshold
  std::vector<std::vector<double>> best_inner;
  std::vector<std::vector<bool>> found;
  bool all_found = true;
  std::vector<std::pair<int, int>> counterexample_candidates;
};

/// For every eigenfunction with lambda > 0, search seeded random admissible
/// sources until |(S(f), phi)| > threshold; failures are reported, never
/// skipped.
DensityWitnessReport density_witness(const DiscreteManifold& m,
                                     const FracSchroedingerOp& op,
                                     const ObservationSet& O, int max_sources,
                                     std::uint64_t seed,
                                     double threshold = 1e-8);

}  // namespace fraclab
