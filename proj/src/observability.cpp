#include "fraclab/observability.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace fraclab {

ConditionHReport check_condition_H(const DiscreteManifold& m,
                                   const ObservationSet& O,
                                   const SpectralDecomposition& spec,
                                   double tie_tolerance, double floor_tol) {
  O.validate(m);
  ConditionHReport rep;
  rep.note =
      "nontrapping clause replaced by the spectral observability constant "
      "(condition (C)); antipodal inclusion checked per candidate p";

  Mat D = distance_matrix(m);
  for (int p : O.vertex_indices) {
    rep.candidates.push_back(p);
    bool ok = true;
    for (int q : antipodal_set(D, p, tie_tolerance))
      if (!O.contains(q)) {
        ok = false;
        break;
      }
    rep.antipodal_ok.push_back(ok);
  }

  const auto& idx = O.vertex_indices;
  double worst = 0.0;
  for (int k = 0; k < spec.n_clusters(); ++k) {
    const SpectralCluster& cl = spec.clusters[k];
    // Gram of the cluster basis restricted to O in the mass inner product;
    // columns are mass-orthonormal on M, so the subspace supremum of
    // ||phi||_M / ||phi||_O is 1/sqrt(min eigenvalue of the Gram).
    Mat G = Mat::Zero(cl.multiplicity, cl.multiplicity);
    for (int a = 0; a < cl.multiplicity; ++a)
      for (int b = a; b < cl.multiplicity; ++b) {
        double acc = 0.0;
        for (int x : idx)
          acc += spec.mass[x] * spec.eigenvectors(x, cl.col_begin + a) *
                 spec.eigenvectors(x, cl.col_begin + b);
        G(a, b) = acc;
        G(b, a) = acc;
      }
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    const double nu = es.eigenvalues().minCoeff();
    if (nu < floor_tol) {
      rep.constant_finite = false;
      rep.worst_cluster = k;
      rep.observability_constant = std::numeric_limits<double>::infinity();
      return rep;
    }
    const double c = 1.0 / std::sqrt(nu);
    if (c > worst) {
      worst = c;
      rep.worst_cluster = k;
    }
  }
  rep.observability_constant = worst;
  return rep;
}

}  // namespace fraclab
