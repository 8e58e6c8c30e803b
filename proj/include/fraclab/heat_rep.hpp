#pragma once

// Heat-semigroup integral representations of fractional powers:
//
//   a^{-alpha} = (1/Gamma(alpha))  int_0^inf e^{-a t} t^{alpha-1} dt
//   a^{ alpha} = (1/Gamma(-alpha)) int_0^inf (e^{-a t} - 1) t^{-1-alpha} dt
//
// realized by composite Gauss-Legendre rules on geometrically spaced panels,
// with the polynomially decaying constant part of the forward integrand
// integrated in closed form beyond the truncation point.

#include "fraclab/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fraclab {

/// Gamma(-alpha) Gamma(1+alpha) = -pi / sin(pi alpha), alpha in (0,1).
double gamma_reflection(double alpha);

/// Gamma(-alpha) for alpha in (0,1), via the reflection identity.
double gamma_of_minus(double alpha);

struct QuadratureScheme {
  Vec nodes;    // strictly increasing, positive
  Vec weights;  // plain dt-weights; integrand factors applied at use time
  double t_min = 0.0;
  double split_point = 0.0;
  double t_max = 0.0;
  double a_min = 0.0, a_max = 0.0;          // calibrated spectral range
  double alpha_min = 0.0, alpha_max = 0.0;  // calibrated order range
  bool forward = false;  // t^{-1-alpha} variant with analytic tail

  bool calibrated(double a, double alpha) const;
};

/// Scheme for a^{-alpha}, target relative error 1e-8 on
/// a in [a_min, a_max], alpha in [0.05, 0.95].
QuadratureScheme make_inverse_power_scheme(double a_min, double a_max,
                                           double alpha_min = 0.05,
                                           double alpha_max = 0.95);

/// Scheme for a^{alpha} (singular t^{-1-alpha} integrand near 0).
QuadratureScheme make_forward_power_scheme(double a_min, double a_max,
                                           double alpha_min = 0.05,
                                           double alpha_max = 0.95);

struct QuadResult {
  double value = 0.0;
  bool warning = false;
  double error_estimate = 0.0;
  std::string message;
};

/// (1/Gamma(alpha)) sum_i w_i e^{-a t_i} t_i^{alpha-1} ~ a^{-alpha}.
double power_via_quadrature(double a, double alpha,
                            const QuadratureScheme& scheme);
QuadResult power_via_quadrature_checked(double a, double alpha,
                                        const QuadratureScheme& scheme);

/// (1/Gamma(-alpha)) [ sum w_i t_i^{-1-alpha} expm1(-a t_i) - t_max^{-alpha}/alpha ].
double forward_power_via_quadrature(double a, double alpha,
                                    const QuadratureScheme& scheme);

/// (1/Gamma(alpha)) sum_i w_i t_i^{alpha-1} heat(t_i, v) for mean-zero v.
Vec inv_frac_power_via_heat(const SpectralDecomposition& s, double alpha,
                            const Vec& v, const QuadratureScheme& scheme,
                            double mean_tol = 1e-10);

struct PointwiseFracResult {
  Vec values;
  bool warning = false;
  double singular_error_estimate = 0.0;
};

/// Pointwise forward representation; the singular-region error estimate comes
/// from the bound |heat(t,u) - u| <= t max|Delta u|.
PointwiseFracResult frac_power_via_heat_pointwise(
    const SpectralDecomposition& s, double alpha, const Vec& u,
    const QuadratureScheme& scheme_singular, double warn_tol = 1e-7);

// ---- moment machinery -------------------------------------------------------

struct MomentSeries {
  Vec t_grid;                  // quadrature nodes (the sampling grid)
  Vec weights;                 // matching quadrature weights
  Mat samples;                 // row j = f_j sampled on t_grid
  std::vector<double> alphas;  // alpha_j per row
};

/// Sampling grid for the moment integrals (log-spaced Gauss-Legendre panels).
QuadratureScheme make_moment_scheme(double t_lo, double t_max);

/// Largest m with the estimated below-grid truncation within tol of the
/// absolute-value integral.
int moment_order_max(const MomentSeries& series, double tol = 1e-8);

/// sum_j Gamma(m+1+alpha_j) int f_j(t) t^{-m} dt.  Throws when m exceeds
/// moment_order_max (the calibrated range).
double moment_functional(const MomentSeries& series, int m);

/// |moment_functional| divided by the same sum with |f_j|; scale-free
/// cancellation witness.
double moment_functional_normalized(const MomentSeries& series, int m);

struct DecayFit {
  double c_large = 0.0, delta_large = 0.0;  // |f| <= c e^{-delta t}, t >= 1
  double c_small = 0.0, delta_small = 0.0;  // |f| <= c e^{-delta/t}, t <= 1
};

/// Least-squares fit of both decay regimes; the fitted bound holds on every
/// sample (c inflated to cover them).
DecayFit fit_decay_bounds(const Vec& t, const Vec& f);

/// CSV: header records split_point, t_max, calibration; rows node,weight.
void write_scheme_csv(std::ostream& os, const QuadratureScheme& scheme);

}  // namespace fraclab
