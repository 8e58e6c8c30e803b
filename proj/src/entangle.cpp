#include "fraclab/entangle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

namespace fraclab {

bool EntangleConfig::integer_shift_free() const {
  for (size_t j = 0; j < alphas.size(); ++j)
    for (size_t k = j + 1; k < alphas.size(); ++k) {
      const double d = alphas[j] - alphas[k];
      if (std::abs(d - std::round(d)) < 1e-9) return false;
    }
  return true;
}

void EntangleConfig::validate(const DiscreteManifold& m) const {
  if (alphas.empty() || alphas.size() != coeffs.size())
    throw std::invalid_argument("entangle config: alphas/coeffs mismatch");
  for (double b : coeffs)
    if (b == 0.0) throw std::invalid_argument("entangle config: zero coefficient");
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("entangle config: alpha <= 0");
    if (std::abs(a - std::round(a)) < 1e-9)
      throw std::invalid_argument("entangle config: integer alpha");
  }
  std::set<double> uniq(alphas.begin(), alphas.end());
  if (uniq.size() != alphas.size())
    throw std::invalid_argument("entangle config: repeated alpha");
  obs.validate(m);
  std::set<int> vs(vanish_set.begin(), vanish_set.end());
  for (int x : obs.vertex_indices)
    if (!vs.count(x))
      throw std::invalid_argument("entangle config: vanish set must contain O");
  if (static_cast<int>(vs.size()) >= m.n_vertices)
    throw std::invalid_argument("entangle config: empty interior");
}

Mat assemble_operator(const SpectralDecomposition& spec,
                      const EntangleConfig& cfg) {
  std::set<int> vs(cfg.vanish_set.begin(), cfg.vanish_set.end());
  std::vector<int> interior;
  for (int v = 0; v < spec.n(); ++v)
    if (!vs.count(v)) interior.push_back(v);
  if (interior.empty())
    throw std::invalid_argument("assemble_operator: empty interior");

  const int n_O = cfg.obs.size();
  const int n_int = static_cast<int>(interior.size());
  Mat E(n_O, cfg.N() * n_int);
  for (int j = 0; j < cfg.N(); ++j) {
    for (int c = 0; c < n_int; ++c) {
      Vec e = Vec::Zero(spec.n());
      e[interior[c]] = 1.0;
      Vec col = cfg.coeffs[j] * frac_power_apply(spec, cfg.alphas[j], e);
      for (int r = 0; r < n_O; ++r)
        E(r, j * n_int + c) = col[cfg.obs.vertex_indices[r]];
    }
  }
  return E;
}

InjectivityDiagnostic injectivity_diagnostic(const Mat& E, double threshold) {
  InjectivityDiagnostic d;
  d.rows = static_cast<int>(E.rows());
  d.cols = static_cast<int>(E.cols());
  d.structural_nullspace = d.cols > d.rows;

  Eigen::BDCSVD<Mat> svd(E, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double sigma_max = std::max(sv.maxCoeff(), 1e-300);

  // injectivity margin: smallest singular value over the column space,
  // zero when the shape alone forces a nullspace
  d.sigma_min = d.structural_nullspace ? 0.0 : sv[sv.size() - 1];
  d.sigma_min_normalized = d.sigma_min / sigma_max;

  const int tail = std::min<int>(6, static_cast<int>(sv.size()));
  for (int i = static_cast<int>(sv.size()) - tail; i < sv.size(); ++i)
    d.sigma_tail.push_back(sv[i]);

  std::vector<int> null_cols;
  for (int c = 0; c < d.cols; ++c) {
    const double s = (c < sv.size()) ? sv[c] : 0.0;
    if (s < threshold * sigma_max) null_cols.push_back(c);
  }
  d.nullspace_candidates = Mat(d.cols, static_cast<int>(null_cols.size()));
  for (size_t k = 0; k < null_cols.size(); ++k)
    d.nullspace_candidates.col(static_cast<int>(k)) =
        svd.matrixV().col(null_cols[k]);
  return d;
}

IntegerShiftCounterexample counterexample_integer_shift(
    const DiscreteManifold& m, const SpectralDecomposition& spec,
    const ObservationSet& O, double alpha, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("integer shift: k >= 1");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("integer shift: alpha in (0,1)");
  std::vector<int> big = enlarge(m, O.vertex_indices, k);
  std::set<int> bigset(big.begin(), big.end());
  std::vector<int> support;
  for (int v = 0; v < m.n_vertices; ++v)
    if (!bigset.count(v)) support.push_back(v);
  if (support.empty())
    throw std::invalid_argument(
        "integer shift: interior empty after " + std::to_string(k) +
        "-hop enlargement; need a manifold with >= " +
        std::to_string(big.size() + 1) + " vertices");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v = Vec::Zero(m.n_vertices);
  for (int x : support) v[x] = gauss(rng);
  v /= m.mass_norm(v);

  IntegerShiftCounterexample out;
  out.v2 = v;
  // apply (-Delta)^k in edge-list form so locality gives exact zeros on O
  Vec w = v;
  for (int step = 0; step < k; ++step) w = m.apply_minus_delta(w);
  out.v1 = w;
  Vec lhs = frac_power_apply(spec, alpha, out.v1);
  Vec rhs = frac_power_apply(spec, alpha + k, out.v2);
  out.residual = spec.mass_norm(lhs - rhs);
  return out;
}

namespace {

// (e^{t Delta} w)(x) for small t via the hop expansion
// sum_l (t Delta)^l w / l!.  Edge-list applications keep exact zeros until
// the cone reaches x, so the true t^{hop distance} smallness survives;
// the spectral sum would cancel catastrophically here.
double heat_entry_hop_series(const DiscreteManifold& m, const Vec& w, int x,
                             double t, double lam_bound) {
  Vec cur = w;
  double acc = cur[x];
  double pw = 1.0;
  double magnitude_bound = 1.0;
  for (int l = 1; l <= 150; ++l) {
    cur = -m.apply_minus_delta(cur);
    pw *= t / l;
    acc += pw * cur[x];
    magnitude_bound *= t * lam_bound / l;
    if (magnitude_bound < 1e-290) break;
  }
  return acc;
}

}  // namespace

MomentSeries heat_moment_series(const DiscreteManifold& m,
                                const SpectralDecomposition& spec,
                                const EntangleConfig& cfg,
                                const std::vector<Vec>& v, int probe_x,
                                const QuadratureScheme& grid) {
  if (static_cast<int>(v.size()) != cfg.N())
    throw std::invalid_argument("heat_moment_series: wrong v count");
  std::set<int> vs(cfg.vanish_set.begin(), cfg.vanish_set.end());
  for (const Vec& vj : v)
    for (int x : cfg.vanish_set)
      if (vj[x] != 0.0)
        throw std::invalid_argument(
            "heat_moment_series: v does not vanish on the vanish set");

  // Gershgorin bound on spec(M^{-1} L) for the hop-series remainder
  Vec row_sum = Vec::Zero(m.n_vertices);
  for (const Edge& e : m.edges) {
    row_sum[e.i] += e.conductance;
    row_sum[e.j] += e.conductance;
  }
  const double lam_bound =
      2.0 * (row_sum.array() / m.mass.array()).maxCoeff();
  const double t_switch = 0.4 / lam_bound;

  MomentSeries series;
  series.t_grid = grid.nodes;
  series.weights = grid.weights;
  series.alphas = cfg.alphas;
  series.samples = Mat(cfg.N(), grid.nodes.size());
  for (int j = 0; j < cfg.N(); ++j) {
    Vec dv = -m.apply_minus_delta(v[j]);  // Delta v_j
    Vec c = spec.coefficients(dv);
    const double front = -cfg.coeffs[j] *
                         std::sin(std::numbers::pi * cfg.alphas[j]) /
                         std::numbers::pi;
    for (int i = 0; i < grid.nodes.size(); ++i) {
      const double t = grid.nodes[i];
      double val;
      if (t <= t_switch) {
        val = heat_entry_hop_series(m, dv, probe_x, t, lam_bound);
      } else {
        val = 0.0;
        for (int q = 0; q < c.size(); ++q)
          val += std::exp(-t * spec.column_eigenvalue[q]) * c[q] *
                 spec.eigenvectors(probe_x, q);
      }
      // t^{-(1+alpha)} overflows alone near the smallest nodes
      const double tpow =
          (val == 0.0)
              ? 0.0
              : std::exp(std::log(std::abs(val)) -
                         (1.0 + cfg.alphas[j]) * std::log(t));
      series.samples(j, i) = front * (val < 0.0 ? -tpow : tpow);
    }
  }
  return series;
}

int default_probe_vertex(const DiscreteManifold& m, const EntangleConfig& cfg) {
  Mat dist = distance_matrix(m);
  std::set<int> vs(cfg.vanish_set.begin(), cfg.vanish_set.end());
  std::vector<int> interior;
  for (int x = 0; x < m.n_vertices; ++x)
    if (!vs.count(x)) interior.push_back(x);
  int best = cfg.obs.vertex_indices.front();
  double best_d = -1.0;
  for (int x : cfg.obs.vertex_indices) {
    double d = std::numeric_limits<double>::infinity();
    for (int y : interior) d = std::min(d, dist(x, y));
    if (d > best_d) {
      best_d = d;
      best = x;
    }
  }
  return best;
}

std::vector<std::pair<double, double>> sigma_min_homotopy(
    const SpectralDecomposition& spec, const ObservationSet& O,
    const std::vector<int>& vanish_set, double alpha1, int steps) {
  std::vector<std::pair<double, double>> curve;
  for (int s = 0; s <= steps; ++s) {
    // approach alpha_1 + 1 from below, never touching it
    const double frac = 1.0 - std::pow(2.0, -(s + 1));
    const double alpha2 = alpha1 + frac;
    EntangleConfig cfg;
    cfg.alphas = {alpha1, alpha2};
    cfg.coeffs = {1.0, -1.0};
    cfg.vanish_set = vanish_set;
    cfg.obs = O;
    Mat E = assemble_operator(spec, cfg);
    auto diag = injectivity_diagnostic(E);
    curve.emplace_back(alpha2, diag.sigma_min_normalized);
  }
  return curve;
}

}  // namespace fraclab
