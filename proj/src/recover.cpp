#include "fraclab/recover.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

namespace fraclab {

HeatTraceSamples heat_trace_from_cauchy(const CauchyDataSet& data,
                                        const DiscreteManifold& m,
                                        const SpectralDecomposition& spec,
                                        double dt, int n_samples) {
  if (data.V_on_O.size() > 0 && data.V_on_O.cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument(
        "heat_trace_from_cauchy: V|_O != 0, reduction hypothesis violated");
  if (!(dt > 0.0) || n_samples < 4)
    throw std::invalid_argument("heat_trace_from_cauchy: bad grid");
  HeatTraceSamples out;
  out.O_indices = data.O.vertex_indices;
  out.mass_on_O = Vec(data.O.size());
  for (int k = 0; k < data.O.size(); ++k)
    out.mass_on_O[k] = m.mass[data.O.vertex_indices[k]];
  out.alpha = data.alpha;
  out.dt = dt;
  out.n_samples = n_samples;
  out.lambda_cap = std::numbers::pi / dt;
  for (const CauchyPair& pair : data.pairs) {
    // sum_k lambda_k^alpha e^{-lambda_k t} (pi_k u)(x)
    Vec c = spec.coefficients(pair.full_u);
    Mat tr(data.O.size(), n_samples);
    for (int i = 0; i < n_samples; ++i) {
      const double t = dt * i;
      Vec ci = c;
      for (int q = 0; q < ci.size(); ++q) {
        const double lam = spec.column_eigenvalue[q];
        ci[q] *= (lam == 0.0) ? 0.0 : std::pow(lam, data.alpha) *
                                          std::exp(-lam * t);
      }
      Vec full = spec.reconstruct(ci);
      for (int k = 0; k < data.O.size(); ++k)
        tr(k, i) = full[data.O.vertex_indices[k]];
    }
    out.per_source.push_back(std::move(tr));
  }
  return out;
}

std::vector<ExpFitMode> exponential_fit(const Mat& samples, double dt,
                                        int max_modes, double noise_floor) {
  const int n_ch = static_cast<int>(samples.rows());
  const int n_t = static_cast<int>(samples.cols());
  if (n_t < 8) throw std::invalid_argument("exponential_fit: grid too short");
  const double scale = samples.cwiseAbs().maxCoeff();
  if (scale == 0.0) return {};

  const int L = n_t / 2;
  const int cols_per = n_t - L + 1;
  Mat H(L, cols_per * n_ch);
  for (int ch = 0; ch < n_ch; ++ch)
    for (int c = 0; c < cols_per; ++c)
      for (int r = 0; r < L; ++r) H(r, ch * cols_per + c) = samples(ch, r + c);

  Eigen::BDCSVD<Mat> svd(H, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = noise_floor * sv[0];
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;
  rank = std::min(rank, max_modes);
  if (rank == 0) return {};
  if (rank == sv.size() ||
      (rank < sv.size() && sv[rank] > 0.0 && sv[rank - 1] / sv[rank] < 10.0)) {
    std::string profile;
    for (int i = 0; i < std::min<int>(sv.size(), 12); ++i)
      profile += " " + std::to_string(sv[i] / sv[0]);
    throw std::runtime_error(
        "exponential_fit: no discernible singular-value gap at floor " +
        std::to_string(noise_floor) + "; profile:" + profile);
  }

  // shift invariance of the signal subspace
  Mat U = svd.matrixU().leftCols(rank);
  Mat U_up = U.topRows(L - 1);
  Mat U_dn = U.bottomRows(L - 1);
  Mat Psi = U_up.colPivHouseholderQr().solve(U_dn);
  Eigen::EigenSolver<Mat> es(Psi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("exponential_fit: pencil eigensolver failed");

  std::vector<double> zs;
  for (int i = 0; i < rank; ++i) {
    const std::complex<double> z = es.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z))) continue;
    if (z.real() <= 0.0 || z.real() > 1.0 + 1e-9) continue;
    zs.push_back(std::min(z.real(), 1.0));
  }
  std::sort(zs.begin(), zs.end(), std::greater<double>());  // lambda ascending
  if (zs.empty()) return {};

  // joint Vandermonde least squares for the amplitudes
  const int r = static_cast<int>(zs.size());
  Mat V(n_t, r);
  for (int k = 0; k < r; ++k) {
    double p = 1.0;
    for (int i = 0; i < n_t; ++i) {
      V(i, k) = p;
      p *= zs[k];
    }
  }
  Eigen::ColPivHouseholderQR<Mat> qr(V);
  Mat amps = qr.solve(samples.transpose());  // r x n_ch

  std::vector<ExpFitMode> modes(r);
  for (int k = 0; k < r; ++k) {
    modes[k].lambda = -std::log(zs[k]) / dt;
    modes[k].amplitudes = amps.row(k).transpose();
  }
  return modes;
}

int SpectralData::total_columns() const {
  int acc = 0;
  for (int d : multiplicities) acc += d;
  return acc;
}

int SpectralData::cluster_col_begin(int k) const {
  int acc = 0;
  for (int i = 0; i < k; ++i) acc += multiplicities[i];
  return acc;
}

SpectralData accumulate_eigenspaces(
    const HeatTraceSamples& traces,
    const std::vector<std::vector<ExpFitMode>>& fits, double dedup_tol,
    double rank_tol) {
  if (fits.empty())
    throw std::invalid_argument("accumulate_eigenspaces: no fits");
  const int n_O = static_cast<int>(traces.O_indices.size());

  struct Member {
    double lambda;
    Vec amp;
  };
  std::vector<Member> all;
  for (const auto& fit : fits)
    for (const ExpFitMode& mode : fit)
      if (mode.lambda > 0.0 && mode.lambda < traces.lambda_cap)
        all.push_back({mode.lambda, mode.amplitudes});
  std::sort(all.begin(), all.end(),
            [](const Member& a, const Member& b) { return a.lambda < b.lambda; });

  SpectralData sd;
  sd.O_indices = traces.O_indices;
  sd.lambda_cap = traces.lambda_cap;
  sd.normalized = false;

  struct Cluster {
    double lambda;
    int d;
    Mat cols;
    bool unsaturated;
    bool ambiguous;
    int alt_d;
  };
  std::vector<Cluster> clusters;

  size_t begin = 0;
  while (begin < all.size()) {
    size_t end = begin + 1;
    double ref = all[begin].lambda;
    while (end < all.size() &&
           all[end].lambda - ref <= dedup_tol * (1.0 + std::abs(ref))) {
      ref = all[end].lambda;
      ++end;
    }
    const int members = static_cast<int>(end - begin);
    double lambda = 0.0;
    for (size_t i = begin; i < end; ++i) lambda += all[i].lambda;
    lambda /= members;

    // divide lambda^alpha out of the amplitudes and compress the stack
    Mat stack(n_O, members);
    const double pow_lam = std::pow(lambda, traces.alpha);
    for (int c = 0; c < members; ++c)
      stack.col(c) = all[begin + c].amp / pow_lam;
    Eigen::BDCSVD<Mat> svd(stack, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double cutoff = rank_tol * std::max(sv[0], 1e-300);
    int rank = 0;
    while (rank < sv.size() && sv[rank] > cutoff) ++rank;
    bool ambiguous = false;
    int alt = rank;
    for (int i = 0; i < sv.size(); ++i) {
      const double ratio = sv[i] / cutoff;
      if (ratio > 0.1 && ratio < 10.0) {
        ambiguous = true;
        alt = (i < rank) ? rank - 1 : rank + 1;
        break;
      }
    }
    Cluster cl;
    cl.lambda = lambda;
    cl.d = std::max(rank, 1);
    cl.cols = svd.matrixU().leftCols(cl.d);
    cl.unsaturated = members <= cl.d;
    cl.ambiguous = ambiguous;
    cl.alt_d = alt;
    clusters.push_back(std::move(cl));
    begin = end;
  }

  // known trivial cluster: mu_0 = 0 with the constant restriction
  int total = 1;
  for (const Cluster& cl : clusters) total += cl.d;
  sd.restrictions = Mat(n_O, total);
  {
    Vec ones = Vec::Ones(n_O);
    double nrm = 0.0;
    for (int k = 0; k < n_O; ++k) nrm += traces.mass_on_O[k];
    sd.restrictions.col(0) = ones / std::sqrt(nrm);
    sd.eigenvalues.push_back(0.0);
    sd.multiplicities.push_back(1);
  }
  int col = 1;
  for (size_t k = 0; k < clusters.size(); ++k) {
    const Cluster& cl = clusters[k];
    sd.eigenvalues.push_back(cl.lambda);
    sd.multiplicities.push_back(cl.d);
    sd.restrictions.middleCols(col, cl.d) = cl.cols;
    if (cl.unsaturated) sd.unsaturated.push_back(static_cast<int>(k) + 1);
    if (cl.ambiguous) {
      sd.ambiguous.push_back(static_cast<int>(k) + 1);
      sd.alt_multiplicity.push_back(cl.alt_d);
    }
    col += cl.d;
  }
  return sd;
}

void joint_gram_schmidt(const DiscreteManifold& m1, Mat& familyA, Mat& familyB,
                        double tol) {
  if (familyA.cols() != familyB.cols())
    throw std::invalid_argument("joint_gram_schmidt: family length mismatch");
  const int K = static_cast<int>(familyA.cols());
  for (int k = 0; k < K; ++k) {
    Vec psi = familyA.col(k);
    Vec b = familyB.col(k);
    for (int l = 0; l < k; ++l) {
      const double c = m1.mass_inner(familyA.col(k), familyA.col(l));
      psi -= c * familyA.col(l);
      b -= c * familyB.col(l);
    }
    const double nrm = m1.mass_norm(psi);
    if (nrm < tol)
      throw std::runtime_error(
          "joint_gram_schmidt: dependent family member at index " +
          std::to_string(k));
    familyA.col(k) = psi / nrm;
    familyB.col(k) = b / nrm;
  }
}

ExpansionResidualReport expansion_residual(SpectralData& sd,
                                           const std::vector<Vec>& sources_on_O,
                                           const std::vector<int>& V_positions,
                                           const Vec& mass_O, double cert_tol) {
  const int n_O = static_cast<int>(sd.O_indices.size());
  const int K = sd.total_columns();
  if (sd.restrictions.rows() != n_O || sd.restrictions.cols() != K)
    throw std::invalid_argument("expansion_residual: inconsistent data");
  if (mass_O.size() != n_O)
    throw std::invalid_argument("expansion_residual: mass_O size mismatch");
  for (const Vec& f : sources_on_O) {
    if (f.size() != n_O)
      throw std::invalid_argument("expansion_residual: source size mismatch");
    for (int p = 0; p < n_O; ++p)
      if (f[p] != 0.0 &&
          !std::binary_search(V_positions.begin(), V_positions.end(), p))
        throw std::invalid_argument(
            "expansion_residual: source not supported in V");
  }

  auto inner_O = [&](const Vec& a, const Vec& b) {
    return (mass_O.array() * a.array() * b.array()).sum();
  };

  const int n_clusters = static_cast<int>(sd.multiplicities.size());
  const int n_src = static_cast<int>(sources_on_O.size());

  // moment maps (f_i, theta_{k,m})_V; supp f in V makes these V integrals
  Mat coeffs(n_src, K);
  for (int i = 0; i < n_src; ++i)
    for (int c = 0; c < K; ++c)
      coeffs(i, c) = inner_O(sources_on_O[i], sd.restrictions.col(c));

  // surjectivity check per cluster (the certificate needs the moment space
  // spanned)
  for (int k = 0; k < n_clusters; ++k) {
    const int d = sd.multiplicities[k];
    Mat T = coeffs.middleCols(sd.cluster_col_begin(k), d);
    Eigen::JacobiSVD<Mat> svd(T);
    const auto& sv = svd.singularValues();
    if (sv.size() < d || sv[d - 1] < 1e-10 * std::max(sv[0], 1e-300))
      throw std::runtime_error(
          "expansion_residual: moment map rank-deficient on cluster " +
          std::to_string(k) + "; add test sources");
  }

  ExpansionResidualReport rep;
  rep.per_cluster.assign(n_clusters, 0.0);
  for (int i = 0; i < n_src; ++i) {
    Vec defect = sources_on_O[i] - sd.restrictions * coeffs.row(i).transpose();
    for (int k = 0; k < n_clusters; ++k) {
      const int b = sd.cluster_col_begin(k);
      for (int m = 0; m < sd.multiplicities[k]; ++m) {
        const Vec& th = sd.restrictions.col(b + m);
        const double nrm = std::sqrt(std::max(inner_O(th, th), 1e-300));
        const double r = std::abs(inner_O(defect, th)) / nrm;
        rep.per_cluster[k] = std::max(rep.per_cluster[k], r);
      }
    }
  }
  rep.max_residual = 0.0;
  for (double r : rep.per_cluster) rep.max_residual = std::max(rep.max_residual, r);
  rep.certified = rep.max_residual < cert_tol;
  if (rep.certified) sd.normalized = true;
  return rep;
}

namespace {

// Lift restriction columns through the known eigenspaces of spec2: per
// cluster, solve Phi_k|_O C = R_k in least squares and return Phi_k C.
Mat lift_restrictions(const DiscreteManifold& m2,
                      const SpectralDecomposition& spec2,
                      const SpectralData& sd, double eig_tol) {
  const int n_O = static_cast<int>(sd.O_indices.size());
  Mat lifted(spec2.n(), sd.total_columns());
  for (size_t k = 0; k < sd.eigenvalues.size(); ++k) {
    // match by eigenvalue
    int match = -1;
    for (int j = 0; j < spec2.n_clusters(); ++j)
      if (std::abs(spec2.clusters[j].eigenvalue - sd.eigenvalues[k]) <=
          eig_tol * (1.0 + sd.eigenvalues[k])) {
        match = j;
        break;
      }
    if (match < 0)
      throw std::runtime_error(
          "lift_restrictions: recovered eigenvalue " +
          std::to_string(sd.eigenvalues[k]) + " matches no eigenspace");
    const SpectralCluster& cl = spec2.clusters[match];
    Mat Phi_O(n_O, cl.multiplicity);
    for (int r = 0; r < n_O; ++r)
      for (int c = 0; c < cl.multiplicity; ++c)
        Phi_O(r, c) = spec2.eigenvectors(sd.O_indices[r], cl.col_begin + c);
    const int b = sd.cluster_col_begin(static_cast<int>(k));
    const int d = sd.multiplicities[k];
    Mat C = Phi_O.colPivHouseholderQr().solve(
        sd.restrictions.middleCols(b, d));
    lifted.middleCols(b, d) =
        spec2.eigenvectors.middleCols(cl.col_begin, cl.multiplicity) * C;
  }
  return lifted;
}

Vec bump_on_positions(const std::vector<int>& verts, int n, double peak_at) {
  // deterministic squared-cosine profile along the list
  Vec f = Vec::Zero(n);
  const double pi = std::numbers::pi;
  const double r = std::max<double>(1.0, static_cast<double>(verts.size()) - 1);
  for (size_t i = 0; i < verts.size(); ++i) {
    const double d = std::abs(static_cast<double>(i) - peak_at);
    const double c = std::cos(0.5 * pi * std::min(d / r, 1.0));
    f[verts[i]] = c * c;
  }
  return f;
}

}  // namespace

WaveSupportReport wave_support_check(const DiscreteManifold& m2,
                                     const SpectralDecomposition& spec2,
                                     const SpectralData& sd,
                                     const std::vector<int>& V_ball,
                                     const std::vector<int>& W_ball,
                                     int T_hops, double tol) {
  WaveSupportReport rep;
  rep.note =
      "continuum unique continuation replaced by direct support inspection "
      "on the verification mesh; N=1 entanglement injectivity covers the "
      "blind extension step";

  std::set<int> O_set(sd.O_indices.begin(), sd.O_indices.end());
  for (int v : V_ball)
    if (!O_set.count(v))
      throw std::invalid_argument("wave_support_check: V not inside O");
  for (int v : W_ball)
    if (!O_set.count(v))
      throw std::invalid_argument("wave_support_check: W not inside O");

  Mat lifted = lift_restrictions(m2, spec2, sd, 1e-5);

  auto run_orientation = [&](const std::vector<int>& src_ball, bool& ok,
                             double& witness) {
    Vec f1 = bump_on_positions(src_ball, m2.n_vertices,
                               0.5 * (src_ball.size() - 1));
    // coefficients (f1, theta_c)_V from the restricted data
    Vec a = Vec::Zero(sd.total_columns());
    for (int c = 0; c < sd.total_columns(); ++c) {
      double acc = 0.0;
      for (size_t r = 0; r < sd.O_indices.size(); ++r) {
        const int x = sd.O_indices[r];
        if (f1[x] != 0.0)
          acc += m2.mass[x] * f1[x] * sd.restrictions(r, c);
      }
      a[c] = acc;
    }
    Vec f2 = lifted * a;
    const double scale = std::max(f2.cwiseAbs().maxCoeff(), 1e-300);

    // outside-O inspection
    double outside = 0.0;
    for (int v = 0; v < m2.n_vertices; ++v)
      if (!O_set.count(v)) outside = std::max(outside, std::abs(f2[v]));
    rep.outside_O_mass = std::max(rep.outside_O_mass, outside / scale);

    // finite-speed window: the other ball stays silent for T hops
    const std::vector<int>& watch = (&src_ball == &V_ball) ? W_ball : V_ball;
    WaveTimeSeries ws = wave_evolve_local(
        m2, f2, T_hops * wave_dt_limit(m2), 1.0);
    double w_max = 0.0;
    for (int s = 0; s <= std::min(T_hops, ws.steps); ++s)
      for (int v : watch) w_max = std::max(w_max, std::abs(ws.snapshots(v, s)));
    witness = w_max / scale;
    ok = witness < tol;
  };

  run_orientation(V_ball, rep.window_ok, rep.window_witness);
  run_orientation(W_ball, rep.reverse_window_ok, rep.reverse_window_witness);
  rep.outside_O_ok = rep.outside_O_mass < tol;
  return rep;
}

PotentialRecovery recover_potential(const BlindCauchyData& data,
                                    const DiscreteManifold& mesh,
                                    const SpectralDecomposition& spec,
                                    double tau) {
  if (!data.v_vanishes_on_O())
    throw std::invalid_argument("recover_potential: V|_O != 0");
  const int n = mesh.n_vertices;
  const int n_O = static_cast<int>(data.O_indices.size());
  std::set<int> O_set(data.O_indices.begin(), data.O_indices.end());
  std::vector<int> interior;
  for (int v = 0; v < n; ++v)
    if (!O_set.count(v)) interior.push_back(v);

  // extension operator = N=1 entanglement operator with vanish set O
  EntangleConfig cfg;
  cfg.alphas = {data.alpha};
  cfg.coeffs = {1.0};
  cfg.vanish_set = data.O_indices;
  cfg.obs = ObservationSet(data.O_indices);
  Mat A_OI = assemble_operator(spec, cfg);

  // A_OO block: frac power of O-supported indicators restricted to O
  Mat A_OO(n_O, n_O);
  for (int c = 0; c < n_O; ++c) {
    Vec e = Vec::Zero(n);
    e[data.O_indices[c]] = 1.0;
    Vec col = frac_power_apply(spec, data.alpha, e);
    for (int r = 0; r < n_O; ++r) A_OO(r, c) = col[data.O_indices[r]];
  }

  Eigen::BDCSVD<Mat> svd(A_OI, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  PotentialRecovery out;
  out.extension_sigma_min = sv[sv.size() - 1];
  if (static_cast<int>(A_OI.cols()) > static_cast<int>(A_OI.rows()) ||
      out.extension_sigma_min < 1e-10 * std::max(sv[0], 1e-300))
    throw std::runtime_error(
        "recover_potential: extension solve rank-deficient "
        "(N=1 entanglement diagnostic: sigma_min = " +
        std::to_string(out.extension_sigma_min) + ")");

  out.V_hat = Vec::Zero(n);
  out.covered.assign(n, false);
  for (int k = 0; k < n_O; ++k) {
    out.V_hat[data.O_indices[k]] = data.V_on_O.size() ? data.V_on_O[k] : 0.0;
    out.covered[data.O_indices[k]] = true;
  }

  const int n_src = static_cast<int>(data.u_O.size());
  std::vector<Vec> u_full(n_src), fracu_full(n_src), f_full(n_src);
  for (int s = 0; s < n_src; ++s) {
    Vec rhs = data.fracu_O[s] - A_OO * data.u_O[s];
    Vec w = svd.solve(rhs);
    Vec u = Vec::Zero(n);
    for (int k = 0; k < n_O; ++k) u[data.O_indices[k]] = data.u_O[s][k];
    for (size_t k = 0; k < interior.size(); ++k) u[interior[k]] = w[k];
    u_full[s] = u;
    fracu_full[s] = frac_power_apply(spec, data.alpha, u);
    Vec f = Vec::Zero(n);
    for (int k = 0; k < n_O; ++k) f[data.O_indices[k]] = data.f_O[s][k];
    f_full[s] = f;
  }

  for (int x : interior) {
    int best = -1;
    double best_u = tau;
    for (int s = 0; s < n_src; ++s)
      if (std::abs(u_full[s][x]) > best_u) {
        best_u = std::abs(u_full[s][x]);
        best = s;
      }
    if (best < 0) {
      ++out.n_uncovered;
      continue;
    }
    out.covered[x] = true;
    out.V_hat[x] =
        (f_full[best][x] - fracu_full[best][x]) / u_full[best][x];
    // spread among the other admissible sources (diagnostic)
    for (int s = 0; s < n_src; ++s) {
      if (s == best || std::abs(u_full[s][x]) <= tau) continue;
      const double v = (f_full[s][x] - fracu_full[s][x]) / u_full[s][x];
      out.max_source_spread =
          std::max(out.max_source_spread, std::abs(v - out.V_hat[x]));
    }
  }
  return out;
}

namespace {

Mat span_projector(const Mat& cols) {
  Eigen::HouseholderQR<Mat> qr(cols);
  Mat Q = qr.householderQ() * Mat::Identity(cols.rows(), cols.cols());
  return Q * Q.transpose();
}

Mat interior_fingerprints(const GaugeModel& model,
                          const std::vector<int>& interior,
                          const std::vector<int>& O_idx,
                          const std::vector<double>& ts) {
  const SpectralDecomposition& spec = *model.spec;
  Mat F(interior.size(), O_idx.size() * ts.size());
  for (size_t xi = 0; xi < interior.size(); ++xi)
    for (size_t s = 0; s < ts.size(); ++s)
      for (size_t o = 0; o < O_idx.size(); ++o)
        F(xi, s * O_idx.size() + o) =
            heat_kernel_entry(spec, ts[s], interior[xi], O_idx[o]);
  return F;
}

bool backtrack_match(
    const std::vector<std::vector<int>>& candidates, size_t pos,
    std::vector<int>& assignment, std::vector<bool>& used,
    const std::function<bool(size_t, int)>& consistent) {
  if (pos == candidates.size()) return true;
  for (int cand : candidates[pos]) {
    if (used[cand]) continue;
    if (!consistent(pos, cand)) continue;
    assignment[pos] = cand;
    used[cand] = true;
    if (backtrack_match(candidates, pos + 1, assignment, used, consistent))
      return true;
    used[cand] = false;
    assignment[pos] = -1;
  }
  return false;
}

}  // namespace

GaugeVerdict verify_gauge_equivalence(const GaugeModel& model1,
                                      const GaugeModel& model2,
                                      const ObservationSet& O, double tol) {
  GaugeVerdict verdict;
  const SpectralData& a = model1.sd;
  const SpectralData& b = model2.sd;

  if (a.eigenvalues.size() != b.eigenvalues.size()) {
    verdict.witness = "cluster count mismatch: " +
                      std::to_string(a.eigenvalues.size()) + " vs " +
                      std::to_string(b.eigenvalues.size());
    return verdict;
  }
  for (size_t k = 0; k < a.eigenvalues.size(); ++k) {
    if (std::abs(a.eigenvalues[k] - b.eigenvalues[k]) >
        tol * (1.0 + std::abs(a.eigenvalues[k]))) {
      verdict.witness = "eigenvalue mismatch at cluster " + std::to_string(k);
      return verdict;
    }
    if (a.multiplicities[k] != b.multiplicities[k]) {
      verdict.witness = "multiplicity mismatch at cluster " + std::to_string(k);
      return verdict;
    }
  }
  for (size_t k = 0; k < a.eigenvalues.size(); ++k) {
    const int begin = a.cluster_col_begin(static_cast<int>(k));
    const int d = a.multiplicities[k];
    Mat Pa = span_projector(a.restrictions.middleCols(begin, d));
    Mat Pb = span_projector(b.restrictions.middleCols(begin, d));
    const double diff = (Pa - Pb).cwiseAbs().maxCoeff();
    if (diff > tol) {
      verdict.witness = "restriction span mismatch at cluster " +
                        std::to_string(k) + " (projector distance " +
                        std::to_string(diff) + ")";
      return verdict;
    }
  }

  const DiscreteManifold& m1 = *model1.mesh;
  const DiscreteManifold& m2 = *model2.mesh;
  if (m1.n_vertices != m2.n_vertices) {
    verdict.witness = "vertex count mismatch";
    return verdict;
  }
  const int n = m1.n_vertices;
  std::vector<int> interior1, interior2;
  for (int v = 0; v < n; ++v)
    if (!O.contains(v)) {
      interior1.push_back(v);
      interior2.push_back(v);
    }

  const std::vector<double> ts = {0.5, 1.0, 2.0};
  Mat F1 = interior_fingerprints(model1, interior1, O.vertex_indices, ts);
  Mat F2 = interior_fingerprints(model2, interior2, O.vertex_indices, ts);

  auto vertex_compatible = [&](size_t i1, int i2) {
    if ((F1.row(i1) - F2.row(i2)).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(model1.potential[interior1[i1]] -
                    model2.potential[interior2[i2]]) <= tol;
  };

  // identity first
  bool identity_ok = true;
  for (size_t i = 0; i < interior1.size(); ++i)
    if (!vertex_compatible(i, static_cast<int>(i))) {
      identity_ok = false;
      break;
    }

  std::vector<int> assignment(interior1.size(), -1);
  if (identity_ok) {
    for (size_t i = 0; i < interior1.size(); ++i)
      assignment[i] = static_cast<int>(i);
  } else {
    std::vector<std::vector<int>> candidates(interior1.size());
    for (size_t i = 0; i < interior1.size(); ++i) {
      for (size_t j = 0; j < interior2.size(); ++j)
        if (vertex_compatible(i, static_cast<int>(j)))
          candidates[i].push_back(static_cast<int>(j));
      if (candidates[i].empty()) {
        verdict.witness =
            "no fingerprint/potential match for interior vertex " +
            std::to_string(interior1[i]);
        return verdict;
      }
    }
    // adjacency consistency with already assigned vertices and with O
    auto adj1 = m1.adjacency();
    auto adj2 = m2.adjacency();
    auto edge_c = [](const std::vector<std::vector<std::pair<int, double>>>& adj,
                     int x, int y) -> double {
      for (auto [w, c] : adj[x])
        if (w == y) return c;
      return -1.0;
    };
    std::vector<bool> used(interior2.size(), false);
    auto consistent = [&](size_t pos, int cand) {
      const int x1 = interior1[pos];
      const int x2 = interior2[cand];
      if (std::abs(m1.mass[x1] - m2.mass[x2]) > tol) return false;
      for (int o : O.vertex_indices)
        if (std::abs(edge_c(adj1, x1, o) - edge_c(adj2, x2, o)) > tol)
          return false;
      for (size_t p = 0; p < pos; ++p) {
        const double c1 = edge_c(adj1, x1, interior1[p]);
        const double c2 = edge_c(adj2, x2, interior2[assignment[p]]);
        if (std::abs(c1 - c2) > tol) return false;
      }
      return true;
    };
    if (!backtrack_match(candidates, 0, assignment, used, consistent)) {
      verdict.witness = "no interior bijection consistent with fingerprints, "
                        "edges, and potentials";
      return verdict;
    }
  }

  verdict.permutation.resize(n);
  for (int v = 0; v < n; ++v) verdict.permutation[v] = v;
  for (size_t i = 0; i < interior1.size(); ++i)
    verdict.permutation[interior1[i]] = interior2[assignment[i]];

  // final check V1 = V2 o Phi
  for (int v = 0; v < n; ++v)
    if (std::abs(model1.potential[v] -
                 model2.potential[verdict.permutation[v]]) > tol) {
      verdict.witness = "potential mismatch at vertex " + std::to_string(v);
      verdict.permutation.clear();
      return verdict;
    }
  verdict.matched = true;
  return verdict;
}

}  // namespace fraclab
