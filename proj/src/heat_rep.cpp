#include "fraclab/heat_rep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace fraclab {

double gamma_reflection(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("gamma_reflection: alpha must be in (0,1)");
  return -std::numbers::pi / std::sin(std::numbers::pi * alpha);
}

double gamma_of_minus(double alpha) {
  return gamma_reflection(alpha) / std::tgamma(1.0 + alpha);
}

namespace {

// 16-point Gauss-Legendre rule on [-1, 1]
constexpr int kGL = 16;
constexpr double kGLNode[kGL / 2] = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr double kGLWeight[kGL / 2] = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

// Composite rule on geometrically spaced panels covering [t_min, t_max].
void fill_geometric_panels(double t_min, double t_max, double ratio,
                           QuadratureScheme& s) {
  std::vector<double> nodes, weights;
  double lo = t_min;
  while (lo < t_max) {
    double hi = std::min(lo * ratio, t_max);
    const double mid = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    for (int k = kGL / 2 - 1; k >= 0; --k) {
      nodes.push_back(mid - half * kGLNode[k]);
      weights.push_back(half * kGLWeight[k]);
    }
    for (int k = 0; k < kGL / 2; ++k) {
      nodes.push_back(mid + half * kGLNode[k]);
      weights.push_back(half * kGLWeight[k]);
    }
    lo = hi;
  }
  s.nodes = Eigen::Map<Vec>(nodes.data(), nodes.size());
  s.weights = Eigen::Map<Vec>(weights.data(), weights.size());
}

QuadratureScheme make_scheme(double a_min, double a_max, double alpha_min,
                             double alpha_max, bool forward) {
  if (!(a_min > 0.0) || !(a_max >= a_min))
    throw std::invalid_argument("quadrature scheme: need 0 < a_min <= a_max");
  if (!(alpha_min > 0.0) || !(alpha_max < 1.0) || !(alpha_min <= alpha_max))
    throw std::invalid_argument("quadrature scheme: alpha range within (0,1)");
  QuadratureScheme s;
  s.a_min = a_min;
  s.a_max = a_max;
  s.alpha_min = alpha_min;
  s.alpha_max = alpha_max;
  s.forward = forward;
  // truncation: e^{-a_min t_max} < 1e-14
  s.t_max = -std::log(1e-14) / a_min;
  // lower cutoff from the worst-case endpoint behavior:
  //   inverse:  (a t_min)^alpha        <= 1e-10 for alpha >= alpha_min
  //   forward:  (a t_min)^{1-alpha}    <= 1e-10 for alpha <= alpha_max
  const double expo = forward ? (1.0 - alpha_max) : alpha_min;
  s.t_min = std::max(std::pow(1e-10, 1.0 / expo) / a_max, 1e-250);
  s.split_point = std::min(1.0, s.t_max);
  fill_geometric_panels(s.t_min, s.t_max, std::sqrt(2.0), s);
  return s;
}

}  // namespace

bool QuadratureScheme::calibrated(double a, double alpha) const {
  return a >= a_min && a <= a_max && alpha >= alpha_min && alpha <= alpha_max;
}

QuadratureScheme make_inverse_power_scheme(double a_min, double a_max,
                                           double alpha_min,
                                           double alpha_max) {
  return make_scheme(a_min, a_max, alpha_min, alpha_max, false);
}

QuadratureScheme make_forward_power_scheme(double a_min, double a_max,
                                           double alpha_min,
                                           double alpha_max) {
  return make_scheme(a_min, a_max, alpha_min, alpha_max, true);
}

QuadResult power_via_quadrature_checked(double a, double alpha,
                                        const QuadratureScheme& scheme) {
  if (!(a > 0.0))
    throw std::invalid_argument("power_via_quadrature: a must be positive");
  if (scheme.forward)
    throw std::invalid_argument("power_via_quadrature: need an inverse-power scheme");
  QuadResult r;
  double acc = 0.0;
  for (int i = 0; i < scheme.nodes.size(); ++i) {
    const double t = scheme.nodes[i];
    acc += scheme.weights[i] * std::exp(-a * t) * std::pow(t, alpha - 1.0);
  }
  r.value = acc / std::tgamma(alpha);
  if (!scheme.calibrated(a, alpha)) {
    r.warning = true;
    const double tail_hi =
        std::exp(-a * scheme.t_max) / (a * std::tgamma(alpha)) *
        std::pow(scheme.t_max, alpha - 1.0);
    const double tail_lo =
        std::pow(a * scheme.t_min, alpha) / std::tgamma(1.0 + alpha);
    r.error_estimate = tail_hi + tail_lo * std::pow(a, -alpha);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "outside calibrated range a in [%g,%g], alpha in [%g,%g]; "
                  "extrapolated error ~ %.3e",
                  scheme.a_min, scheme.a_max, scheme.alpha_min,
                  scheme.alpha_max, r.error_estimate);
    r.message = buf;
  }
  return r;
}

double power_via_quadrature(double a, double alpha,
                            const QuadratureScheme& scheme) {
  return power_via_quadrature_checked(a, alpha, scheme).value;
}

double forward_power_via_quadrature(double a, double alpha,
                                    const QuadratureScheme& scheme) {
  if (!(a >= 0.0))
    throw std::invalid_argument("forward_power_via_quadrature: a must be >= 0");
  if (!scheme.forward)
    throw std::invalid_argument("forward_power_via_quadrature: need a forward scheme");
  if (a == 0.0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < scheme.nodes.size(); ++i) {
    const double t = scheme.nodes[i];
    // t^{-1-alpha} alone can overflow near t_min; keep the product in range
    const double wt =
        std::exp(std::log(scheme.weights[i]) - (1.0 + alpha) * std::log(t));
    acc += wt * std::expm1(-a * t);
  }
  // beyond t_max the integrand is (0 - 1) t^{-1-alpha} up to e^{-a t_max}
  acc -= std::pow(scheme.t_max, -alpha) / alpha;
  return acc / gamma_of_minus(alpha);
}

Vec inv_frac_power_via_heat(const SpectralDecomposition& s, double alpha,
                            const Vec& v, const QuadratureScheme& scheme,
                            double mean_tol) {
  if (scheme.forward)
    throw std::invalid_argument("inv_frac_power_via_heat: need an inverse-power scheme");
  Vec c = s.coefficients(v);
  const double scale = std::max(1.0, s.mass_norm(v));
  if (std::abs(c[0]) > mean_tol * scale)
    throw std::invalid_argument(
        "inv_frac_power_via_heat: nonzero mean, (v,1)/||1|| = " +
        std::to_string(c[0]));
  Vec v0 = v - s.eigenvectors.col(0) * c[0];
  Vec acc = Vec::Zero(s.n());
  for (int i = 0; i < scheme.nodes.size(); ++i) {
    const double t = scheme.nodes[i];
    acc += (scheme.weights[i] * std::pow(t, alpha - 1.0)) *
           heat_apply(s, t, v0);
  }
  return acc / std::tgamma(alpha);
}

PointwiseFracResult frac_power_via_heat_pointwise(
    const SpectralDecomposition& s, double alpha, const Vec& u,
    const QuadratureScheme& scheme, double warn_tol) {
  if (!scheme.forward)
    throw std::invalid_argument("frac_power_via_heat_pointwise: need a forward scheme");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("frac_power_via_heat_pointwise: alpha in (0,1)");
  PointwiseFracResult out;
  Vec acc = Vec::Zero(s.n());
  for (int i = 0; i < scheme.nodes.size(); ++i) {
    const double t = scheme.nodes[i];
    const double wt =
        std::exp(std::log(scheme.weights[i]) - (1.0 + alpha) * std::log(t));
    acc += wt * heat_minus_identity_apply(s, t, u);
  }
  // tail: heat(t,u) -> mean(u), so the integrand tends to (mean - u) t^{-1-alpha}
  Vec c = s.coefficients(u);
  Vec mean_part = s.eigenvectors.col(0) * c[0];
  acc += (mean_part - u) * (std::pow(scheme.t_max, -alpha) / alpha);
  out.values = acc / gamma_of_minus(alpha);

  // singular-region estimate from |heat(t,u) - u| <= t max|Delta u|
  Vec lap(u.size());
  {
    Vec cc = c;
    for (int i = 0; i < cc.size(); ++i) cc[i] *= s.column_eigenvalue[i];
    lap = s.reconstruct(cc);
  }
  const double max_dlap = lap.cwiseAbs().maxCoeff();
  out.singular_error_estimate = max_dlap *
                                std::pow(scheme.t_min, 1.0 - alpha) /
                                ((1.0 - alpha) * std::abs(gamma_of_minus(alpha)));
  const double result_scale = std::max(out.values.cwiseAbs().maxCoeff(), 1e-30);
  out.warning = out.singular_error_estimate > warn_tol * result_scale;
  return out;
}

// ---- moment machinery -------------------------------------------------------

QuadratureScheme make_moment_scheme(double t_lo, double t_max) {
  if (!(t_lo > 0.0) || !(t_max > t_lo))
    throw std::invalid_argument("moment scheme: need 0 < t_lo < t_max");
  QuadratureScheme s;
  s.t_min = t_lo;
  s.t_max = t_max;
  s.split_point = std::min(1.0, t_max);
  s.forward = false;
  fill_geometric_panels(t_lo, t_max, std::sqrt(2.0), s);
  return s;
}

namespace {

double moment_integral(const MomentSeries& series, int j, int m,
                       bool absolute) {
  double acc = 0.0;
  for (int i = 0; i < series.t_grid.size(); ++i) {
    const double v = series.samples(j, i);
    if (v == 0.0) continue;
    const double log_term = std::log(series.weights[i]) + std::log(std::abs(v)) -
                            m * std::log(series.t_grid[i]);
    if (log_term > 700.0) return std::numeric_limits<double>::infinity();
    const double term = std::exp(log_term);
    acc += (absolute || v > 0.0) ? term : -term;
  }
  return acc;
}

}  // namespace

int moment_order_max(const MomentSeries& series, double tol) {
  const int n_j = static_cast<int>(series.samples.rows());
  const double t0 = series.t_grid[0];
  int best = 0;
  for (int m = 1; m <= 32; ++m) {
    double denom = 0.0, trunc = 0.0;
    for (int j = 0; j < n_j; ++j) {
      const double g = std::tgamma(m + 1.0 + series.alphas[j]);
      denom += g * moment_integral(series, j, m, true);
      // below-grid estimate: |f| nondecreasing toward t0 on (0, t0]
      const double f0 = std::abs(series.samples(j, 0));
      if (f0 > 0.0)
        trunc += g * 2.0 *
                 std::exp(std::log(f0) +
                          (1.0 - static_cast<double>(m)) * std::log(t0));
    }
    if (denom == 0.0 && trunc == 0.0) {
      best = m;  // identically zero series integrates exactly for any order
      continue;
    }
    if (!std::isfinite(denom) || !std::isfinite(trunc) || denom <= 0.0 ||
        trunc > tol * denom)
      break;
    best = m;
  }
  return best;
}

double moment_functional(const MomentSeries& series, int m) {
  if (m < 1) throw std::invalid_argument("moment_functional: need m >= 1");
  const int cap = moment_order_max(series);
  if (m > cap)
    throw std::invalid_argument("moment_functional: order " +
                                std::to_string(m) +
                                " beyond calibrated range [1," +
                                std::to_string(cap) + "]");
  double acc = 0.0;
  for (int j = 0; j < series.samples.rows(); ++j)
    acc += std::tgamma(m + 1.0 + series.alphas[j]) *
           moment_integral(series, j, m, false);
  return acc;
}

double moment_functional_normalized(const MomentSeries& series, int m) {
  double denom = 0.0;
  for (int j = 0; j < series.samples.rows(); ++j)
    denom += std::tgamma(m + 1.0 + series.alphas[j]) *
             moment_integral(series, j, m, true);
  if (denom <= 0.0) return 0.0;
  return std::abs(moment_functional(series, m)) / denom;
}

DecayFit fit_decay_bounds(const Vec& t, const Vec& f) {
  DecayFit fit;
  auto regress = [](const std::vector<double>& x, const std::vector<double>& y,
                    double& slope, double& intercept) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    slope = (n * sxy - sx * sy) / det;
    intercept = (sy * sxx - sx * sxy) / det;
  };

  std::vector<double> xl, yl, xs, ys;
  for (int i = 0; i < t.size(); ++i) {
    const double a = std::abs(f[i]);
    if (a < 1e-290) continue;
    if (t[i] >= 1.0) {
      xl.push_back(t[i]);
      yl.push_back(std::log(a));
    } else {
      xs.push_back(1.0 / t[i]);
      ys.push_back(std::log(a));
    }
  }
  if (xl.size() >= 2) {
    double slope, icpt;
    regress(xl, yl, slope, icpt);
    fit.delta_large = std::max(-slope, 0.0);
    double worst = -1e300;
    for (size_t i = 0; i < xl.size(); ++i)
      worst = std::max(worst, yl[i] + fit.delta_large * xl[i]);
    fit.c_large = std::exp(worst);
  }
  if (xs.size() >= 2) {
    double slope, icpt;
    regress(xs, ys, slope, icpt);
    fit.delta_small = std::max(-slope, 0.0);
    double worst = -1e300;
    for (size_t i = 0; i < xs.size(); ++i)
      worst = std::max(worst, ys[i] + fit.delta_small * xs[i]);
    fit.c_small = std::exp(worst);
  }
  return fit;
}

void write_scheme_csv(std::ostream& os, const QuadratureScheme& scheme) {
  char buf[64];
  os << "# split_point=" << scheme.split_point << " t_max=" << scheme.t_max
     << " a_range=[" << scheme.a_min << "," << scheme.a_max << "]"
     << " alpha_range=[" << scheme.alpha_min << "," << scheme.alpha_max << "]"
     << " forward=" << (scheme.forward ? 1 : 0) << "\n";
  os << "node,weight\n";
  for (int i = 0; i < scheme.nodes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", scheme.nodes[i]);
    os << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", scheme.weights[i]);
    os << buf << "\n";
  }
}

}  // namespace fraclab
