#pragma once

// Discrete condition (H) / condition (C) checks.  Nontrapping has no faithful
// graph analog; the implemented check is the spectral relaxation: a uniform
// observability constant over all computed eigenspaces, plus antipodal
// inclusion per candidate base point.

#include "fraclab/manifold.hpp"
#include "fraclab/spectral.hpp"

#include <limits>
#include <string>
#include <vector>

namespace fraclab {

struct ConditionHReport {
  std::vector<int> candidates;        // the p in O that were examined
  std::vector<bool> antipodal_ok;     // antipodal_set(p) subset of O
  double observability_constant = 0;  // sup over eigenspaces of ||phi||_M / ||phi||_O
  int worst_cluster = -1;
  bool constant_finite = true;
  std::string note;                   // records the (H) -> (C) substitution
};

/// observability_constant is the per-cluster subspace supremum
/// 1 / sqrt(min eig of the O-restricted Gram), maximized over clusters; +inf
/// with the offending cluster index when some eigenspace has an element with
/// ||phi||_{L^2(O)} below floor_tol.
ConditionHReport check_condition_H(const DiscreteManifold& m,
                                   const ObservationSet& O,
                                   const SpectralDecomposition& spec,
                                   double tie_tolerance,
                                   double floor_tol = 1e-12);

}  // namespace fraclab
