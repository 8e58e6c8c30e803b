#pragma once

// Numerical realization of the entanglement principle: the multi-function
// constraint operator mapping stacked interior values (v_1..v_N, each zero
// on the vanish set) to the O-restriction of sum_j b_j (-Delta)^{alpha_j} v_j,
// its injectivity margins, the sharp integer-shift counterexample, and the
// heat-moment series feeding the moment-vanishing witness.

#include "fraclab/heat_rep.hpp"
#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

#include <cstdint>
#include <vector>

namespace fraclab {

struct EntangleConfig {
  std::vector<double> alphas;  // pairwise distinct, in (0,inf) \ N
  std::vector<double> coeffs;  // all nonzero
  std::vector<int> vanish_set;  // where every v_j must vanish (contains O)
  ObservationSet obs;

  int N() const { return static_cast<int>(alphas.size()); }
  /// alpha_j - alpha_k not an integer for all j != k (tolerance 1e-9).
  bool integer_shift_free() const;
  void validate(const DiscreteManifold& m) const;
};

/// Dense |O| x (N * |interior|) matrix; interior = complement of vanish_set.
/// Columns are frac_power_apply of indicator-supported inputs.
Mat assemble_operator(const SpectralDecomposition& spec,
                      const EntangleConfig& cfg);

struct InjectivityDiagnostic {
  int rows = 0, cols = 0;
  double sigma_min = 0.0;
  double sigma_min_normalized = 0.0;
  bool structural_nullspace = false;  // cols > rows
  Mat nullspace_candidates;           // right singular vectors under threshold
  std::vector<double> sigma_tail;     // smallest few singular values
};

InjectivityDiagnostic injectivity_diagnostic(const Mat& E,
                                             double threshold = 1e-8);

struct IntegerShiftCounterexample {
  Vec v1, v2;       // v1 = (-Delta)^k v, v2 = v; both vanish on O
  double residual;  // ||(-Delta)^alpha v1 - (-Delta)^{alpha+k} v2|| (mass norm)
};

/// Builds the sharp counterexample to the integer-shift condition: a seeded
/// random v vanishing on enlarge(O, k), v1 = (-Delta)^k v applied in edge-list
/// form so v1 vanishes on O with exact zeros.
IntegerShiftCounterexample counterexample_integer_shift(
    const DiscreteManifold& m, const SpectralDecomposition& spec,
    const ObservationSet& O, double alpha, int k, std::uint64_t seed);

/// f_j(t) = (-b_j sin(pi alpha_j)/pi) (e^{t Delta} Delta v_j)(x) t^{-(1+alpha_j)}
/// sampled at the scheme nodes of `grid`; probe x should sit deep inside O.
MomentSeries heat_moment_series(const DiscreteManifold& m,
                                const SpectralDecomposition& spec,
                                const EntangleConfig& cfg,
                                const std::vector<Vec>& v, int probe_x,
                                const QuadratureScheme& grid);

/// Probe with maximal distance to the support complement of the vanish set.
int default_probe_vertex(const DiscreteManifold& m, const EntangleConfig& cfg);

/// sigma_min of the N=2 operator along alpha_2 -> alpha_1 + 1; the paper
/// gives no rate, the curve is reported without asserting a law.
std::vector<std::pair<double, double>> sigma_min_homotopy(
    const SpectralDecomposition& spec, const ObservationSet& O,
    const std::vector<int>& vanish_set, double alpha1, int steps);

}  // namespace fraclab
