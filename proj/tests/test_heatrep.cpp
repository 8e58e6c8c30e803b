#include "fraclab/heat_rep.hpp"
#include "fraclab/spectral.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fraclab;

TEST_CASE("gamma reflection") {
  CHECK(gamma_reflection(0.5) == doctest::Approx(-M_PI).epsilon(1e-14));
  CHECK(gamma_reflection(1.0 / 3.0) ==
        doctest::Approx(-2.0 * M_PI / std::sqrt(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(gamma_reflection(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_reflection(1.0), std::invalid_argument);

  // cross-check against the Lanczos oracle on an alpha grid
  for (int i = 1; i <= 39; ++i) {
    const double a = i / 40.0;
    const double lanczos =
        oracle::lanczos_gamma(-a) * oracle::lanczos_gamma(1.0 + a);
    CHECK(std::abs(gamma_reflection(a) - lanczos) / std::abs(lanczos) < 1e-12);
    CHECK(std::abs(gamma_of_minus(a) - oracle::lanczos_gamma(-a)) /
              std::abs(oracle::lanczos_gamma(-a)) <
          1e-12);
  }
}

TEST_CASE("scheme structure") {
  auto s = make_inverse_power_scheme(0.5, 8.0);
  for (int i = 0; i + 1 < s.nodes.size(); ++i) {
    CHECK(s.nodes[i] > 0.0);
    CHECK(s.nodes[i] < s.nodes[i + 1]);
  }
  CHECK(s.weights.allFinite());
  CHECK(s.t_max > 1.0);
  CHECK(std::exp(-0.5 * s.t_max) < 1e-13);
}

TEST_CASE("scalar inverse power quadrature") {
  auto s = make_inverse_power_scheme(0.5, 8.0);
  CHECK(power_via_quadrature(1.0, 0.5, s) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(power_via_quadrature(4.0, 0.5, s) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(power_via_quadrature(2.0, 0.3, s) ==
        doctest::Approx(std::pow(2.0, -0.3)).epsilon(1e-9));

  // full calibrated grid at the documented 1e-8 target
  for (double a = 0.5; a <= 8.0; a *= 1.5)
    for (double alpha : {0.05, 0.15, 0.35, 0.5, 0.65, 0.85, 0.95}) {
      const double got = power_via_quadrature(a, alpha, s);
      const double want = std::pow(a, -alpha);
      CHECK(std::abs(got - want) / want < 1e-8);
    }

  // out-of-range warning carries an error estimate
  auto r = power_via_quadrature_checked(100.0, 0.5, s);
  CHECK(r.warning);
  CHECK(!r.message.empty());
}

TEST_CASE("scalar forward power quadrature") {
  auto s = make_forward_power_scheme(0.5, 8.0);
  CHECK(forward_power_via_quadrature(0.0, 0.5, s) == 0.0);
  for (double a = 0.5; a <= 8.0; a *= 1.5)
    for (double alpha : {0.05, 0.25, 0.5, 0.75, 0.95}) {
      const double got = forward_power_via_quadrature(a, alpha, s);
      const double want = std::pow(a, alpha);
      CHECK(std::abs(got - want) / want < 1e-8);
    }
}

TEST_CASE("inverse power via heat semigroup matches spectral calculus") {
  auto m = build_flat_torus({8, 8});
  auto spec = decompose(m);
  auto s = make_inverse_power_scheme(spec.lambda_1(), spec.lambda_max());

  SUBCASE("single mode") {
    Vec phi = spec.eigenvectors.col(spec.clusters[1].col_begin);
    const double lam = spec.clusters[1].eigenvalue;
    for (double alpha : {0.25, 0.5, 0.75}) {
      Vec got = inv_frac_power_via_heat(spec, alpha, phi, s);
      Vec want = std::pow(lam, -alpha) * phi;
      CHECK(spec.mass_norm(got - want) / spec.mass_norm(want) < 1e-6);
    }
  }
  SUBCASE("random mean-zero field") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Vec v(64);
    for (int i = 0; i < 64; ++i) v[i] = g(rng);
    v -= spec.eigenvectors.col(0) * spec.coefficients(v)[0];
    for (double alpha : {0.25, 0.5, 0.75}) {
      Vec got = inv_frac_power_via_heat(spec, alpha, v, s);
      Vec want = inv_frac_power_apply(spec, alpha, v);
      CHECK(spec.mass_norm(got - want) / spec.mass_norm(want) < 1e-6);
    }
  }
  SUBCASE("zero maps to zero") {
    Vec z = Vec::Zero(64);
    CHECK(spec.mass_norm(inv_frac_power_via_heat(spec, 0.5, z, s)) == 0.0);
  }
  SUBCASE("nonzero mean rejected") {
    CHECK_THROWS_AS(
        inv_frac_power_via_heat(spec, 0.5, Vec::Constant(64, 1.0), s),
        std::invalid_argument);
  }
}

TEST_CASE("pointwise forward representation matches spectral calculus") {
  auto m = build_flat_torus({8, 8});
  auto spec = decompose(m);
  auto s = make_forward_power_scheme(spec.lambda_1(), spec.lambda_max());

  SUBCASE("constants map to zero") {
    auto r = frac_power_via_heat_pointwise(spec, 0.5, Vec::Constant(64, 2.0), s);
    CHECK(r.values.cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("eigenfunction scaling") {
    int k2 = -1;
    for (int k = 0; k < spec.n_clusters(); ++k)
      if (std::abs(spec.clusters[k].eigenvalue - 2.0) < 1e-9) k2 = k;
    REQUIRE(k2 >= 0);
    Vec phi = spec.eigenvectors.col(spec.clusters[k2].col_begin);
    auto r = frac_power_via_heat_pointwise(spec, 0.5, phi, s);
    CHECK(spec.mass_norm(r.values - std::sqrt(2.0) * phi) < 1e-5);
  }
  SUBCASE("random field across alphas") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    Vec u(64);
    for (int i = 0; i < 64; ++i) u[i] = g(rng);
    for (double alpha : {0.25, 0.5, 0.75}) {
      auto r = frac_power_via_heat_pointwise(spec, alpha, u, s);
      Vec want = frac_power_apply(spec, alpha, u);
      CHECK(spec.mass_norm(r.values - want) / spec.mass_norm(want) < 1e-5);
      CHECK(!r.warning);
    }
  }
}

TEST_CASE("moment functional") {
  SUBCASE("zero series") {
    MomentSeries series;
    auto grid = make_moment_scheme(1e-6, 20.0);
    series.t_grid = grid.nodes;
    series.weights = grid.weights;
    series.alphas = {0.4};
    series.samples = Mat::Zero(1, grid.nodes.size());
    CHECK(moment_functional(series, 1) == 0.0);
    CHECK(moment_functional_normalized(series, 1) == 0.0);
  }

  SUBCASE("single analytic profile vs adaptive quadrature oracle") {
    const double alpha = 0.35;
    auto f = [alpha](double t) {
      return std::exp(-t) * std::exp(-1.0 / t) * std::pow(t, -(1.0 + alpha));
    };
    auto grid = make_moment_scheme(1e-4, 60.0);
    MomentSeries series;
    series.t_grid = grid.nodes;
    series.weights = grid.weights;
    series.alphas = {alpha};
    series.samples = Mat(1, grid.nodes.size());
    for (int i = 0; i < grid.nodes.size(); ++i)
      series.samples(0, i) = f(grid.nodes[i]);

    const int m_ord = 2;
    const double got = moment_functional(series, m_ord);
    const double oracle_int = oracle::adaptive_simpson(
        [&](double t) { return f(t) * std::pow(t, -m_ord); }, 5e-3, 60.0,
        1e-14);
    const double want = std::tgamma(m_ord + 1.0 + alpha) * oracle_int;
    CHECK(std::abs(got - want) / std::abs(want) < 1e-8);
  }

  SUBCASE("order beyond calibration rejected with the range") {
    auto grid = make_moment_scheme(1e-3, 20.0);
    MomentSeries series;
    series.t_grid = grid.nodes;
    series.weights = grid.weights;
    series.alphas = {0.4};
    series.samples = Mat(1, grid.nodes.size());
    for (int i = 0; i < grid.nodes.size(); ++i)
      series.samples(0, i) = std::exp(-grid.nodes[i]);  // O(1) at t -> 0
    const int cap = moment_order_max(series);
    CHECK_THROWS_WITH_AS(moment_functional(series, cap + 1),
                         doctest::Contains("calibrated range"),
                         std::invalid_argument);
  }
}

TEST_CASE("decay bound fit covers the samples") {
  auto grid = make_moment_scheme(1e-3, 30.0);
  Vec f(grid.nodes.size());
  for (int i = 0; i < grid.nodes.size(); ++i) {
    const double t = grid.nodes[i];
    f[i] = 0.7 * std::exp(-0.9 * t) * std::exp(-0.4 / t);
  }
  auto fit = fit_decay_bounds(grid.nodes, f);
  CHECK(fit.delta_large > 0.0);
  CHECK(fit.delta_small > 0.0);
  for (int i = 0; i < grid.nodes.size(); ++i) {
    const double t = grid.nodes[i];
    if (std::abs(f[i]) < 1e-290) continue;
    if (t >= 1.0)
      CHECK(std::abs(f[i]) <=
            fit.c_large * std::exp(-fit.delta_large * t) * (1.0 + 1e-9));
    else
      CHECK(std::abs(f[i]) <=
            fit.c_small * std::exp(-fit.delta_small / t) * (1.0 + 1e-9));
  }
}
