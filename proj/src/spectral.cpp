#include "fraclab/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fraclab {

double SpectralDecomposition::lambda_1() const {
  if (clusters.size() < 2)
    throw std::logic_error("spectral: no positive eigenvalue");
  return clusters[1].eigenvalue;
}

double SpectralDecomposition::lambda_max() const {
  return clusters.back().eigenvalue;
}

Vec SpectralDecomposition::coefficients(const Vec& f) const {
  return eigenvectors.transpose() * (mass.array() * f.array()).matrix();
}

Vec SpectralDecomposition::reconstruct(const Vec& c) const {
  return eigenvectors * c;
}

double SpectralDecomposition::mass_inner(const Vec& u, const Vec& v) const {
  return (mass.array() * u.array() * v.array()).sum();
}

double SpectralDecomposition::mass_norm(const Vec& u) const {
  return std::sqrt(mass_inner(u, u));
}

namespace {

// Deterministic mass-orthonormal basis of the span of X (columns already
// mass-orthonormal): greedily orthogonalize the projections of coordinate
// directions, largest residual first, smallest vertex index on ties.
Mat canonical_cluster_basis(const Mat& X, const Vec& mass) {
  const int d = static_cast<int>(X.cols());
  // G(:, i) = coefficient vector of the projection of e_i
  Mat G = X.transpose() * mass.asDiagonal();  // d x n
  Mat Q(d, d);
  int built = 0;
  Eigen::VectorXi used = Eigen::VectorXi::Zero(G.cols());
  while (built < d) {
    int best = -1;
    double best_norm = -1.0;
    for (int i = 0; i < G.cols(); ++i) {
      if (used[i]) continue;
      Vec r = G.col(i);
      if (built > 0)
        r -= Q.leftCols(built) * (Q.leftCols(built).transpose() * G.col(i));
      const double nr = r.norm();
      if (nr > best_norm * (1.0 + 1e-12)) {
        best_norm = nr;
        best = i;
      }
    }
    if (best < 0 || best_norm <= 1e-12)
      throw std::runtime_error("spectral: degenerate cluster basis pivot");
    Vec r = G.col(best);
    if (built > 0)
      r -= Q.leftCols(built) * (Q.leftCols(built).transpose() * G.col(best));
    // one re-orthogonalization pass for accuracy
    if (built > 0)
      r -= Q.leftCols(built) * (Q.leftCols(built).transpose() * r);
    Q.col(built) = r / r.norm();
    used[best] = 1;
    ++built;
  }
  return X * Q;
}

}  // namespace

SpectralDecomposition decompose(const DiscreteManifold& m,
                                double cluster_tolerance) {
  if (!(cluster_tolerance > 0.0))
    throw std::invalid_argument("decompose: cluster tolerance must be positive");
  m.validate();
  if (m.n_vertices > 5000)
    throw std::runtime_error(
        "decompose: dense path only, n_vertices > 5000 unsupported");

  const int n = m.n_vertices;
  const Vec sqrt_mass = m.mass.array().sqrt();
  const Vec inv_sqrt_mass = sqrt_mass.array().inverse();
  Mat S = m.dense_laplacian();
  S = inv_sqrt_mass.asDiagonal() * S * inv_sqrt_mass.asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("decompose: eigensolver failed to converge");

  Vec raw_vals = es.eigenvalues();
  Mat raw_vecs = inv_sqrt_mass.asDiagonal() * es.eigenvectors();

  SpectralDecomposition out;
  out.mass = m.mass;
  out.cluster_tolerance = cluster_tolerance;
  out.eigenvectors = Mat(n, n);
  out.column_eigenvalue = Vec(n);

  int begin = 0;
  while (begin < n) {
    int end = begin + 1;
    double ref = raw_vals[begin];
    while (end < n &&
           raw_vals[end] - ref <= cluster_tolerance * (1.0 + std::abs(ref))) {
      ref = raw_vals[end];
      ++end;
    }
    double lambda = raw_vals.segment(begin, end - begin).mean();
    if (std::abs(lambda) <= cluster_tolerance) lambda = 0.0;
    if (lambda < 0.0)
      throw std::runtime_error("decompose: negative eigenvalue " +
                               std::to_string(lambda));
    SpectralCluster cl;
    cl.eigenvalue = lambda;
    cl.multiplicity = end - begin;
    cl.col_begin = begin;
    Mat basis =
        canonical_cluster_basis(raw_vecs.middleCols(begin, end - begin), m.mass);
    out.eigenvectors.middleCols(begin, end - begin) = basis;
    for (int c = begin; c < end; ++c) out.column_eigenvalue[c] = lambda;
    out.clusters.push_back(cl);
    begin = end;
  }

  if (out.clusters.empty() || out.clusters[0].eigenvalue != 0.0 ||
      out.clusters[0].multiplicity != 1)
    throw std::runtime_error(
        "decompose: kernel is not one dimensional (disconnected graph?)");
  // kernel basis vector is the projected coordinate direction, hence the
  // positive normalized constant already; enforce sign for safety
  if (out.eigenvectors(0, 0) < 0.0) out.eigenvectors.col(0) *= -1.0;

  // residual check L Phi = M Phi Lambda
  Mat L = m.dense_laplacian();
  Mat R = L * out.eigenvectors -
          m.mass.asDiagonal() * out.eigenvectors *
              out.column_eigenvalue.asDiagonal();
  const double scale = std::max(1.0, out.lambda_max());
  const double resid = R.cwiseAbs().maxCoeff();
  if (resid > 1e-8 * scale * std::sqrt(static_cast<double>(n)))
    throw std::runtime_error("decompose: eigensolver residual " +
                             std::to_string(resid));
  return out;
}

Vec project(const SpectralDecomposition& s, const Vec& f, int k) {
  if (k < 0 || k >= s.n_clusters())
    throw std::invalid_argument("project: bad cluster index");
  const SpectralCluster& cl = s.clusters[k];
  auto block = s.eigenvectors.middleCols(cl.col_begin, cl.multiplicity);
  Vec c = block.transpose() * (s.mass.array() * f.array()).matrix();
  return block * c;
}

Vec frac_power_apply(const SpectralDecomposition& s, double alpha,
                     const Vec& f) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("frac_power_apply: alpha must be positive");
  Vec c = s.coefficients(f);
  for (int i = 0; i < c.size(); ++i) {
    const double lam = s.column_eigenvalue[i];
    c[i] = (lam == 0.0) ? 0.0 : std::pow(lam, alpha) * c[i];
  }
  return s.reconstruct(c);
}

Vec inv_frac_power_apply(const SpectralDecomposition& s, double alpha,
                         const Vec& f, double mean_tol) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("inv_frac_power_apply: alpha must be positive");
  Vec c = s.coefficients(f);
  const double mean_coeff = c[0];
  const double scale = std::max(1.0, s.mass_norm(f));
  if (std::abs(mean_coeff) > mean_tol * scale)
    throw std::invalid_argument(
        "inv_frac_power_apply: nonzero mean, (f,1)/||1|| = " +
        std::to_string(mean_coeff));
  c[0] = 0.0;
  for (int i = 1; i < c.size(); ++i)
    c[i] = std::pow(s.column_eigenvalue[i], -alpha) * c[i];
  return s.reconstruct(c);
}

Vec heat_apply(const SpectralDecomposition& s, double t, const Vec& f) {
  if (t < 0.0) throw std::invalid_argument("heat_apply: negative time");
  Vec c = s.coefficients(f);
  for (int i = 0; i < c.size(); ++i)
    c[i] *= std::exp(-t * s.column_eigenvalue[i]);
  return s.reconstruct(c);
}

Vec heat_minus_identity_apply(const SpectralDecomposition& s, double t,
                              const Vec& f) {
  if (t < 0.0) throw std::invalid_argument("heat_minus_identity: negative time");
  Vec c = s.coefficients(f);
  for (int i = 0; i < c.size(); ++i)
    c[i] *= std::expm1(-t * s.column_eigenvalue[i]);
  return s.reconstruct(c);
}

double heat_kernel_entry(const SpectralDecomposition& s, double t, int x,
                         int y) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel_entry: need t > 0");
  double acc = 0.0;
  for (int i = 0; i < s.n(); ++i)
    acc += std::exp(-t * s.column_eigenvalue[i]) * s.eigenvectors(x, i) *
           s.eigenvectors(y, i);
  return acc;
}

Vec wave_evolve_spectral(const SpectralDecomposition& s, const Vec& f,
                         double t) {
  Vec c = s.coefficients(f);
  for (int i = 0; i < c.size(); ++i)
    c[i] *= std::cos(std::sqrt(s.column_eigenvalue[i]) * t);
  return s.reconstruct(c);
}

double sobolev_norm(const SpectralDecomposition& s, double order,
                    const Vec& f) {
  Vec c = s.coefficients(f);
  double acc = 0.0;
  for (int i = 0; i < c.size(); ++i)
    acc += std::pow(1.0 + s.column_eigenvalue[i], order) * c[i] * c[i];
  return std::sqrt(acc);
}

void write_spectral_csv(std::ostream& os, const SpectralDecomposition& s) {
  char buf[40];
  os << "cluster,eigenvalue";
  for (int v = 0; v < s.n(); ++v) os << ",v" << v;
  os << "\n";
  for (int k = 0; k < s.n_clusters(); ++k) {
    const SpectralCluster& cl = s.clusters[k];
    for (int l = 0; l < cl.multiplicity; ++l) {
      std::snprintf(buf, sizeof(buf), "%.17g", cl.eigenvalue);
      os << k << "," << buf;
      for (int v = 0; v < s.n(); ++v) {
        std::snprintf(buf, sizeof(buf), "%.17g",
                      s.eigenvectors(v, cl.col_begin + l));
        os << "," << buf;
      }
      os << "\n";
    }
  }
}

std::vector<std::array<double, 3>> weyl_curve(const SpectralDecomposition& s,
                                              int dimension_hint) {
  std::vector<std::array<double, 3>> rows;
  int counted = 0;
  for (const SpectralCluster& cl : s.clusters) {
    counted += cl.multiplicity;
    rows.push_back({cl.eigenvalue, static_cast<double>(counted),
                    std::pow(cl.eigenvalue, 0.5 * dimension_hint)});
  }
  return rows;
}

std::vector<std::array<double, 3>> supnorm_curve(
    const SpectralDecomposition& s, int dimension_hint) {
  std::vector<std::array<double, 3>> rows;
  for (const SpectralCluster& cl : s.clusters) {
    double sup = 0.0;
    for (int l = 0; l < cl.multiplicity; ++l)
      sup = std::max(sup,
                     s.eigenvectors.col(cl.col_begin + l).cwiseAbs().maxCoeff());
    rows.push_back({cl.eigenvalue, sup,
                    std::pow(std::max(cl.eigenvalue, 1.0),
                             0.25 * (dimension_hint - 1))});
  }
  return rows;
}

}  // namespace fraclab
