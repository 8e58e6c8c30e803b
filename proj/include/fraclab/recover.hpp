#pragma once

// Blind inverse pipeline: heat-trace reduction of Cauchy data, matrix-pencil
// exponential fitting, eigenspace accumulation into spectral data, the joint
// Gram-Schmidt normalization machinery with its expansion-residual
// certificate, wave-based support checks, pointwise potential recovery, and
// gauge-equivalence verification.
//
// Blind/oracle split: inversion operations accept only O-indexed structures
// (HeatTraceSamples, BlindCauchyData, SpectralData).  Operations that need
// the hidden manifold are data-owner / verification-side and say so.

#include "fraclab/entangle.hpp"
#include "fraclab/forward.hpp"
#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"
#include "fraclab/wave_local.hpp"

#include <string>
#include <vector>

namespace fraclab {

struct HeatTraceSamples {
  std::vector<int> O_indices;
  Vec mass_on_O;
  double alpha = 0.0;
  double dt = 0.0;                // uniform grid t_i = i dt (t_0 = 0)
  int n_samples = 0;
  double lambda_cap = 0.0;        // pi / dt, recorded in every report
  std::vector<Mat> per_source;    // |O| x n_samples each
};

/// Data-owner side: samples of t -> (e^{t Delta} (-Delta)^alpha u)(x) for
/// x in O on a uniform grid.  Refuses when V|_O != 0 (the reduction lemma's
/// hypothesis).
HeatTraceSamples heat_trace_from_cauchy(const CauchyDataSet& data,
                                        const DiscreteManifold& m,
                                        const SpectralDecomposition& spec,
                                        double dt, int n_samples);

struct ExpFitMode {
  double lambda = 0.0;
  Vec amplitudes;  // per O vertex
};

/// Joint matrix-pencil (Hankel SVD + shift invariance) fit across all

/// channels sharing one exponent set.  Throws listing the singular-value
/// profile when no discernible gap separates signal from noise.
std::vector<ExpFitMode> exponential_fit(const Mat& samples, double dt,
                                        int max_modes, double noise_floor);

struct SpectralData {
  std::vector<double> eigenvalues;   // ascending, one per cluster
  std::vector<int> multiplicities;
  Mat restrictions;                  // |O| x total columns, cluster blocks
  std::vector<int> O_indices;
  bool normalized = false;
  double lambda_cap = 0.0;
  std::vector<int> unsaturated;      // clusters whose rank cannot be trusted
  std::vector<int> ambiguous;        // rank decision inside hysteresis band
  std::vector<int> alt_multiplicity; // second hypothesis for ambiguous ones

  int total_columns() const;
  int cluster_col_begin(int k) const;
};

/// Cluster exponents across sources, stack amplitude vectors, compress by
/// SVD; rank = recovered multiplicity.  The trivial cluster (mu_0 = 0,
/// constant restriction) is inserted explicitly.
SpectralData accumulate_eigenspaces(const HeatTraceSamples& traces,
                                    const std::vector<std::vector<ExpFitMode>>& fits,
                                    double dedup_tol, double rank_tol);

/// In-place classical Gram-Schmidt of family A in the mass inner product of
/// m1, applying the same coefficients and divisors to family B.  Throws with
/// the failing index when some ||psi_hat|| falls below tol.
void joint_gram_schmidt(const DiscreteManifold& m1, Mat& familyA,
                        Mat& familyB, double tol = 1e-12);

struct ExpansionResidualReport {
  std::vector<double> per_cluster;
  double max_residual = 0.0;
  bool certified = false;
};

/// Residual of the restricted eigenfunction expansion: for test sources f
/// supported in V (positions within O), the defect f - sum_c (f, theta_c)_V
/// theta_c is tested against each cluster's columns on O.  Zero residual
/// certifies orthonormal consistency and sets `normalized`.  Throws when the
/// per-cluster moment map of the test sources is rank-deficient (cannot
/// certify).
ExpansionResidualReport expansion_residual(SpectralData& sd,
                                           const std::vector<Vec>& sources_on_O,
                                           const std::vector<int>& V_positions,
                                           const Vec& mass_O,
                                           double cert_tol = 1e-8);

struct WaveSupportReport {
  bool outside_O_ok = false;
  double outside_O_mass = 0.0;   // max |f2| off O relative to max |f2|
  bool window_ok = false;
  double window_witness = 0.0;   // max |U| on W over |t| <= T hops
  bool reverse_window_ok = false;
  double reverse_window_witness = 0.0;
  std::string note;
};

/// Verification side (owns m2): builds f2 from the restricted data over the
/// source ball V, lifts through the known eigenspaces, evolves the local
/// finite-speed solver, and inspects supports.  Runs both orientations of
/// the (V, W) pair.
WaveSupportReport wave_support_check(const DiscreteManifold& m2,
                                     const SpectralDecomposition& spec2,
                                     const SpectralData& sd,
                                     const std::vector<int>& V_ball,
                                     const std::vector<int>& W_ball,
                                     int T_hops, double tol = 1e-8);

struct PotentialRecovery {
  Vec V_hat;                     // full length; O entries copied from data
  std::vector<bool> covered;     // per vertex, trivially true on O
  double extension_sigma_min = 0.0;
  int n_uncovered = 0;
  double max_source_spread = 0.0;  // disagreement between admissible sources
};

/// Blind-side potential recovery on a matched mesh: the unique extension of
/// (u|_O, ((-Delta)^alpha u)|_O) through the known operator is a linear solve
/// whose uniqueness is the N=1 entanglement operator's injectivity.
PotentialRecovery recover_potential(const BlindCauchyData& data,
                                    const DiscreteManifold& mesh,
                                    const SpectralDecomposition& spec,
                                    double tau);

struct GaugeModel {
  const DiscreteManifold* mesh = nullptr;
  const SpectralDecomposition* spec = nullptr;
  Vec potential;      // full length (recovered or owned)
  SpectralData sd;
};

struct GaugeVerdict {
  bool matched = false;
  std::vector<int> permutation;  // vertex map model1 -> model2, identity on O
  std::string witness;           // first mismatched invariant on refutation
};

/// Compares eigenvalue lists and restriction spans on O, then searches for a
/// vertex bijection on the complements matching heat-kernel fingerprints and
/// carrying V1 to V2.  Identity is tried first.
GaugeVerdict verify_gauge_equivalence(const GaugeModel& model1,
                                      const GaugeModel& model2,
                                      const ObservationSet& O,
                                      double tol = 1e-6);

}  // namespace fraclab
