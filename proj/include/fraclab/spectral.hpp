#pragma once

// Generalized eigendecomposition of the discrete Laplace-Beltrami operator
// (L x = lambda M x) and the spectral calculus built on it: projections,
// fractional powers, heat semigroup, wave propagator, Sobolev-type norms.
// All inner products use the mass weights.

#include "fraclab/manifold.hpp"

#include <iosfwd>
#include <vector>

namespace fraclab {

struct SpectralCluster {
  double eigenvalue = 0.0;
  int multiplicity = 0;
  int col_begin = 0;  // first column of this cluster in `eigenvectors`
};

struct SpectralDecomposition {
  Vec mass;
  std::vector<SpectralCluster> clusters;
  Mat eigenvectors;       // columns mass-orthonormal: Phi^T M Phi = I
  Vec column_eigenvalue;  // cluster eigenvalue repeated per column
  double cluster_tolerance = 0.0;

  int n() const { return static_cast<int>(eigenvectors.rows()); }
  int n_clusters() const { return static_cast<int>(clusters.size()); }
  double lambda_1() const;    // smallest positive eigenvalue
  double lambda_max() const;

  Vec coefficients(const Vec& f) const;  // Phi^T M f
  Vec reconstruct(const Vec& c) const;   // Phi c

  double mass_inner(const Vec& u, const Vec& v) const;
  double mass_norm(const Vec& u) const;
};

/// Dense generalized eigendecomposition with deterministic per-cluster basis
/// (greedy pivoted orthogonalization of projected coordinate directions).
/// Eigenvalues within cluster_tolerance * (1 + lambda) are merged.
SpectralDecomposition decompose(const DiscreteManifold& m,
                                double cluster_tolerance = 1e-8);

/// Orthogonal projection onto eigenspace k.
Vec project(const SpectralDecomposition& s, const Vec& f, int k);

/// sum_k lambda_k^alpha pi_k f; kills the constant mode.  alpha > 0 and may
/// exceed 1.
Vec frac_power_apply(const SpectralDecomposition& s, double alpha,
                     const Vec& f);

/// sum_{k>=1} lambda_k^{-alpha} pi_k f for mean-zero f; throws reporting the
/// mean otherwise.
Vec inv_frac_power_apply(const SpectralDecomposition& s, double alpha,
                         const Vec& f, double mean_tol = 1e-10);

/// sum_k exp(-t lambda_k) pi_k f, t >= 0.
Vec heat_apply(const SpectralDecomposition& s, double t, const Vec& f);

/// (exp(t Delta) - I) f via expm1 in coefficient space; stable for tiny t.
Vec heat_minus_identity_apply(const SpectralDecomposition& s, double t,
                              const Vec& f);

/// Heat kernel entry sum_k e^{-t lambda_k} sum_l phi(x) phi(y).
double heat_kernel_entry(const SpectralDecomposition& s, double t, int x,
                         int y);

/// sum_k cos(sqrt(lambda_k) t) pi_k f  (zero initial velocity).
Vec wave_evolve_spectral(const SpectralDecomposition& s, const Vec& f,
                         double t);

/// || (1 + Lambda)^{s/2} coefficients || in the mass inner product.
double sobolev_norm(const SpectralDecomposition& s, double order,
                    const Vec& f);

/// CSV export: one row per eigenpair (cluster id, eigenvalue, entries).
void write_spectral_csv(std::ostream& os, const SpectralDecomposition& s);

// Diagnostics (reported, never asserted):
/// rows (lambda, N(lambda), lambda^{n/2})
std::vector<std::array<double, 3>> weyl_curve(const SpectralDecomposition& s,
                                              int dimension_hint);
/// rows (lambda_k, max |phi_{k,l}|, lambda_k^{(n-1)/4})
std::vector<std::array<double, 3>> supnorm_curve(
    const SpectralDecomposition& s, int dimension_hint);

}  // namespace fraclab
