#include "fraclab/forward.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace fraclab {

bool Potential::vanishes_on(const ObservationSet& O, double tol) const {
  for (int x : O.vertex_indices)
    if (std::abs(values[x]) > tol) return false;
  return true;
}

FracSchroedingerOp::FracSchroedingerOp(const SpectralDecomposition& spec,
                                       double alpha, Potential V,
                                       double kernel_tol)
    : spec_(&spec), alpha_(alpha), V_(std::move(V)) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("FracSchroedingerOp: alpha must be positive");
  if (V_.values.size() != spec.n())
    throw std::invalid_argument("FracSchroedingerOp: potential size mismatch");
  sqrt_mass_ = spec.mass.array().sqrt();
  inv_sqrt_mass_ = sqrt_mass_.array().inverse();

  // B = M^{1/2} A M^{-1/2} with A = Phi Lambda^alpha Phi^T M + diag(V);
  // symmetric because A is self-adjoint in the mass inner product.
  Mat W = sqrt_mass_.asDiagonal() * spec.eigenvectors;  // mass-orthonormal -> orthonormal
  Vec pow_lam(spec.n());
  for (int i = 0; i < spec.n(); ++i) {
    const double lam = spec.column_eigenvalue[i];
    pow_lam[i] = (lam == 0.0) ? 0.0 : std::pow(lam, alpha);
  }
  Mat B = W * pow_lam.asDiagonal() * W.transpose();
  B.diagonal() += V_.values;
  B = 0.5 * (B + B.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Mat> es(B);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("FracSchroedingerOp: eigensolver failed");
  sym_eigenvalues_ = es.eigenvalues();
  sym_eigenvectors_ = es.eigenvectors();

  const Vec abs_vals = sym_eigenvalues_.cwiseAbs();
  const double sigma_max = abs_vals.maxCoeff();
  null_threshold_ = kernel_tol * std::max(sigma_max, 1e-300);

  std::vector<int> null_cols;
  double largest_below = 0.0;
  double smallest_above = std::numeric_limits<double>::infinity();
  for (int i = 0; i < abs_vals.size(); ++i) {
    if (abs_vals[i] < null_threshold_) {
      null_cols.push_back(i);
      largest_below = std::max(largest_below, abs_vals[i]);
    } else {
      smallest_above = std::min(smallest_above, abs_vals[i]);
    }
  }
  kernel_.dim = static_cast<int>(null_cols.size());
  kernel_.columns = Mat(spec.n(), kernel_.dim);
  for (int k = 0; k < kernel_.dim; ++k)
    kernel_.columns.col(k) =
        inv_sqrt_mass_.asDiagonal() * sym_eigenvectors_.col(null_cols[k]);
  kernel_.adjoint_columns = kernel_.columns;  // real V
  kernel_.sigma_below = largest_below;
  kernel_.sigma_above = std::isfinite(smallest_above) ? smallest_above : 0.0;
  // the dichotomy becomes a thresholded rank decision; flag thresholds that
  // sit inside a gap narrower than 10x machine precision relative to sigma_max
  kernel_.gap_warning =
      kernel_.dim > 0 && kernel_.sigma_above > 0.0 &&
      kernel_.sigma_above - kernel_.sigma_below <
          10.0 * std::numeric_limits<double>::epsilon() * sigma_max;
}

Vec FracSchroedingerOp::apply(const Vec& u) const {
  return frac_power_apply(*spec_, alpha_, u) +
         (V_.values.array() * u.array()).matrix();
}

Vec FracSchroedingerOp::solve_canonical(const Vec& f,
                                        double membership_tol) const {
  // membership: (f, zeta) = 0 for all adjoint-kernel zeta
  const double scale = std::max(spec_->mass_norm(f), 1e-300);
  for (int k = 0; k < kernel_.dim; ++k) {
    const double ip = spec_->mass_inner(f, kernel_.adjoint_columns.col(k));
    if (std::abs(ip) > membership_tol * scale)
      throw std::invalid_argument(
          "solve_canonical: source not in H^O, (f, zeta_" + std::to_string(k) +
          ") = " + std::to_string(ip));
  }
  // B y = M^{1/2} f, pseudo-inverse on the complement of the nullspace
  Vec b = sym_eigenvectors_.transpose() *
          (sqrt_mass_.array() * f.array()).matrix();
  for (int i = 0; i < b.size(); ++i) {
    const double s = sym_eigenvalues_[i];
    b[i] = (std::abs(s) < null_threshold_) ? 0.0 : b[i] / s;
  }
  return inv_sqrt_mass_.asDiagonal() * (sym_eigenvectors_ * b);
}

KernelBasis kernel_basis(const SpectralDecomposition& spec, double alpha,
                         const Potential& V, double tol) {
  return FracSchroedingerOp(spec, alpha, V, tol).kernel();
}

ComplexKernelBasis kernel_basis_complex(const SpectralDecomposition& spec,
                                        double alpha,
                                        const Eigen::VectorXcd& V,
                                        double tol) {
  using CMat = Eigen::MatrixXcd;
  const int n = spec.n();
  Vec sqrt_mass = spec.mass.array().sqrt();
  Vec inv_sqrt_mass = sqrt_mass.array().inverse();
  Mat W = sqrt_mass.asDiagonal() * spec.eigenvectors;
  Vec pow_lam(n);
  for (int i = 0; i < n; ++i) {
    const double lam = spec.column_eigenvalue[i];
    pow_lam[i] = (lam == 0.0) ? 0.0 : std::pow(lam, alpha);
  }
  Mat frac = W * pow_lam.asDiagonal() * W.transpose();

  ComplexKernelBasis out;
  auto nullspace = [&](const Eigen::VectorXcd& pot, CMat& cols) -> int {
    CMat B = frac.cast<std::complex<double>>();
    B.diagonal() += pot;
    Eigen::JacobiSVD<CMat> svd(B, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = tol * std::max(sv.maxCoeff(), 1e-300);
    int dim = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] < cutoff) ++dim;
    cols = CMat(n, dim);
    for (int k = 0; k < dim; ++k)
      cols.col(k) = inv_sqrt_mass.asDiagonal() *
                    svd.matrixV().col(sv.size() - dim + k);
    return dim;
  };
  out.dim = nullspace(V, out.columns);
  out.adjoint_dim = nullspace(V.conjugate(), out.adjoint_columns);
  return out;
}

Vec hit_vector(const SpectralDecomposition& spec, const ObservationSet& O,
               const Mat& adjoint_columns, const Vec& target) {
  const int N = static_cast<int>(adjoint_columns.cols());
  if (target.size() != N)
    throw std::invalid_argument("hit_vector: target size mismatch");
  // Gram of the restrictions in the O mass inner product
  Mat G = Mat::Zero(N, N);
  for (int a = 0; a < N; ++a)
    for (int b = a; b < N; ++b) {
      double acc = 0.0;
      for (int x : O.vertex_indices)
        acc += spec.mass[x] * adjoint_columns(x, a) * adjoint_columns(x, b);
      G(a, b) = acc;
      G(b, a) = acc;
    }
  Eigen::JacobiSVD<Mat> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (N > 0 && sv[N - 1] < 1e-12 * std::max(sv[0], 1e-300)) {
    // dependent combination = nullvector of the restricted Gram
    Vec dep = svd.matrixV().col(N - 1);
    std::string msg =
        "hit_vector: adjoint-kernel restrictions dependent on O "
        "(discrete UCP failure), combination:";
    for (int k = 0; k < N; ++k) msg += " " + std::to_string(dep[k]);
    throw std::runtime_error(msg);
  }
  Vec a = svd.solve(target);
  Vec h = Vec::Zero(spec.n());
  for (int x : O.vertex_indices)
    for (int k = 0; k < N; ++k) h[x] += a[k] * adjoint_columns(x, k);
  return h;
}

Vec admissible_projection(const SpectralDecomposition& spec,
                          const ObservationSet& O, const KernelBasis& kernel,
                          const Vec& f) {
  if (kernel.dim == 0) return f;
  Vec out = f;
  for (int k = 0; k < kernel.dim; ++k) {
    Vec e = Vec::Zero(kernel.dim);
    e[k] = 1.0;
    Vec theta = hit_vector(spec, O, kernel.adjoint_columns, e);
    const double ip = spec.mass_inner(f, kernel.adjoint_columns.col(k));
    out -= ip * theta;
  }
  return out;
}

bool BlindCauchyData::v_vanishes_on_O() const {
  return V_on_O.size() == 0 || V_on_O.cwiseAbs().maxCoeff() == 0.0;
}

BlindCauchyData CauchyDataSet::blind(const DiscreteManifold& m) const {
  BlindCauchyData b;
  b.O_indices = O.vertex_indices;
  b.alpha = alpha;
  b.seed = seed;
  b.V_on_O = V_on_O;
  b.manifold_hash = manifold_hash;
  b.mass_on_O = Vec(O.size());
  for (int k = 0; k < O.size(); ++k) b.mass_on_O[k] = m.mass[O.vertex_indices[k]];
  for (const CauchyPair& p : pairs) {
    b.f_O.push_back(p.f_O);
    b.u_O.push_back(p.u_O);
    b.fracu_O.push_back(p.fracu_O);
  }
  return b;
}

Vec bump_source(const DiscreteManifold& m, const Mat& dist,
                const ObservationSet& O, int center, double radius) {
  Vec f = Vec::Zero(m.n_vertices);
  const double pi = 3.14159265358979323846;
  for (int x : O.vertex_indices) {
    const double d = dist(center, x);
    if (d <= radius) {
      const double c = std::cos(0.5 * pi * d / radius);
      f[x] = c * c;
    }
  }
  return f;
}

CauchyDataSet cauchy_generate(const DiscreteManifold& m,
                              const FracSchroedingerOp& op,
                              const ObservationSet& O, int n_sources,
                              std::uint64_t seed) {
  O.validate(m);
  const SpectralDecomposition& spec = op.spectral();
  CauchyDataSet ds;
  ds.O = O;
  ds.alpha = op.alpha();
  ds.seed = seed;
  ds.manifold_hash = m.content_hash();
  ds.V_on_O = Vec(O.size());
  for (int k = 0; k < O.size(); ++k)
    ds.V_on_O[k] = op.potential().values[O.vertex_indices[k]];

  const Mat dist = distance_matrix(m);
  const double diameter = dist.maxCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_center(0, O.size() - 1);
  std::uniform_real_distribution<double> pick_radius(1.0,
                                                     std::max(2.0, diameter / 2.0));
  for (int s = 0; s < n_sources; ++s) {
    const int center = O.vertex_indices[pick_center(rng)];
    const double radius = pick_radius(rng);
    Vec raw = bump_source(m, dist, O, center, radius);
    if (raw.cwiseAbs().maxCoeff() == 0.0) raw[center] = 1.0;
    Vec f = admissible_projection(spec, O, op.kernel(), raw);
    Vec u = op.solve_canonical(f);

    CauchyPair pair;
    pair.full_f = f;
    pair.full_u = u;
    Vec fracu = frac_power_apply(spec, op.alpha(), u);
    pair.f_O = Vec(O.size());
    pair.u_O = Vec(O.size());
    pair.fracu_O = Vec(O.size());
    for (int k = 0; k < O.size(); ++k) {
      pair.f_O[k] = f[O.vertex_indices[k]];
      pair.u_O[k] = u[O.vertex_indices[k]];
      pair.fracu_O[k] = fracu[O.vertex_indices[k]];
    }
    pair.residual = spec.mass_norm(op.apply(u) - f);
    double ortho = 0.0;
    for (int k = 0; k < op.kernel().dim; ++k)
      ortho = std::max(ortho, std::abs(spec.mass_inner(
                                  u, op.kernel().columns.col(k))));
    pair.kernel_orthogonality = ortho;
    ds.pairs.push_back(std::move(pair));
  }
  return ds;
}

std::pair<DiscreteManifold, Potential> gauge_pullback(
    const DiscreteManifold& m, const Potential& V,
    const std::vector<int>& perm, const ObservationSet& O) {
  const std::string violation = automorphism_violation(m, perm);
  if (!violation.empty())
    throw std::invalid_argument("gauge_pullback: not an automorphism: " +
                                violation);
  for (int x : O.vertex_indices)
    if (perm[x] != x)
      throw std::invalid_argument("gauge_pullback: permutation moves O vertex " +
                                  std::to_string(x));
  DiscreteManifold out = m;
  for (int v = 0; v < m.n_vertices; ++v) out.mass[v] = m.mass[perm[v]];
  std::vector<int> inv(perm.size());
  for (size_t v = 0; v < perm.size(); ++v) inv[perm[v]] = static_cast<int>(v);
  out.edges.clear();
  for (const Edge& e : m.edges) {
    Edge ne = e;
    ne.i = inv[e.i];
    ne.j = inv[e.j];
    if (ne.i > ne.j) std::swap(ne.i, ne.j);
    out.edges.push_back(ne);
  }
  std::sort(out.edges.begin(), out.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  out.validate();
  Potential Vp;
  Vp.values = Vec(m.n_vertices);
  for (int v = 0; v < m.n_vertices; ++v) Vp.values[v] = V.values[perm[v]];
  return {out, Vp};
}

DensityWitnessReport density_witness(const DiscreteManifold& m,
                                     const FracSchroedingerOp& op,
                                     const ObservationSet& O, int max_sources,
                                     std::uint64_t seed, double threshold) {
  const SpectralDecomposition& spec = op.spectral();
  DensityWitnessReport rep;
  rep.best_inner.resize(spec.n_clusters());
  rep.found.resize(spec.n_clusters());
  for (int k = 0; k < spec.n_clusters(); ++k) {
    rep.best_inner[k].assign(spec.clusters[k].multiplicity, 0.0);
    rep.found[k].assign(spec.clusters[k].multiplicity, false);
  }

  const Mat dist = distance_matrix(m);
  const double diameter = dist.maxCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_center(0, O.size() - 1);
  std::uniform_real_distribution<double> pick_radius(1.0,
                                                     std::max(2.0, diameter / 2.0));
  for (int s = 0; s < max_sources; ++s) {
    const int center = O.vertex_indices[pick_center(rng)];
    Vec raw = bump_source(m, dist, O, center, pick_radius(rng));
    if (raw.cwiseAbs().maxCoeff() == 0.0) continue;
    Vec f = admissible_projection(spec, O, op.kernel(), raw);
    Vec u = op.solve_canonical(f);
    for (int k = 1; k < spec.n_clusters(); ++k) {
      const SpectralCluster& cl = spec.clusters[k];
      for (int l = 0; l < cl.multiplicity; ++l) {
        const double ip = std::abs(
            spec.mass_inner(u, spec.eigenvectors.col(cl.col_begin + l)));
        rep.best_inner[k][l] = std::max(rep.best_inner[k][l], ip);
        if (ip > threshold) rep.found[k][l] = true;
      }
    }
  }
  for (int k = 1; k < spec.n_clusters(); ++k)
    for (int l = 0; l < spec.clusters[k].multiplicity; ++l)
      if (!rep.found[k][l]) {
        rep.all_found = false;
        rep.counterexample_candidates.emplace_back(k, l);
      }
  return rep;
}

}  // namespace fraclab
