#include "fraclab/spectral.hpp"
#include "fraclab/wave_local.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace fraclab;

namespace {

Vec random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_CASE("torus spectra match the closed form") {
  SUBCASE("3x3") {
    auto spec = decompose(build_flat_torus({3, 3}));
    auto expect = oracle::cluster(oracle::torus_eigenvalues({3, 3}));
    REQUIRE(spec.n_clusters() == static_cast<int>(expect.size()));
    for (int k = 0; k < spec.n_clusters(); ++k) {
      CHECK(spec.clusters[k].eigenvalue ==
            doctest::Approx(expect[k].first).epsilon(1e-10));
      CHECK(spec.clusters[k].multiplicity == expect[k].second);
    }
    // clusters {0:1, 3:4, 6:4}
    CHECK(spec.clusters[1].eigenvalue == doctest::Approx(3.0));
    CHECK(spec.clusters[1].multiplicity == 4);
    CHECK(spec.clusters[2].eigenvalue == doctest::Approx(6.0));
    CHECK(spec.clusters[2].multiplicity == 4);
  }
  SUBCASE("4x4") {
    auto spec = decompose(build_flat_torus({4, 4}));
    auto expect = oracle::cluster(oracle::torus_eigenvalues({4, 4}));
    REQUIRE(spec.n_clusters() == static_cast<int>(expect.size()));
    for (int k = 0; k < spec.n_clusters(); ++k)
      CHECK(spec.clusters[k].multiplicity == expect[k].second);
    CHECK(spec.clusters[0].eigenvalue == 0.0);
    CHECK(spec.clusters[0].multiplicity == 1);
  }
  SUBCASE("C_4 closed form 2-2cos(pi j/2)") {
    auto spec = decompose(build_cycle(4));
    REQUIRE(spec.n_clusters() == 3);
    CHECK(spec.clusters[0].eigenvalue == 0.0);
    CHECK(spec.clusters[1].eigenvalue == doctest::Approx(2.0));
    CHECK(spec.clusters[1].multiplicity == 2);
    CHECK(spec.clusters[2].eigenvalue == doctest::Approx(4.0));
    CHECK(spec.clusters[2].multiplicity == 1);
  }
}

TEST_CASE("mass orthonormality and first eigenvector") {
  auto m = perturb_metric(build_flat_torus({4, 4}), 2, 0.35);
  auto spec = decompose(m);
  Mat G = spec.eigenvectors.transpose() * m.mass.asDiagonal() *
          spec.eigenvectors;
  CHECK((G - Mat::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
  // lambda_0 = 0 with the normalized positive constant
  const double c = 1.0 / std::sqrt(m.total_mass());
  for (int v = 0; v < 16; ++v)
    CHECK(spec.eigenvectors(v, 0) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("deterministic cluster basis is reproducible") {
  auto m = build_flat_torus({4, 4});
  auto a = decompose(m);
  auto b = decompose(m);
  CHECK((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection completeness and idempotence") {
  auto m = perturb_metric(build_flat_torus({8, 8}), 7, 0.25);
  auto spec = decompose(m);
  Vec f = random_vec(64, 42);

  Vec sum = Vec::Zero(64);
  for (int k = 0; k < spec.n_clusters(); ++k) {
    Vec pk = project(spec, f, k);
    sum += pk;
    Vec pkk = project(spec, pk, k);
    CHECK(spec.mass_norm(pkk - pk) < 1e-10);
    // image is an eigenvector block: L pk = lambda M pk
    Vec lhs = m.apply_laplacian(pk);
    Vec rhs = spec.clusters[k].eigenvalue *
              (m.mass.array() * pk.array()).matrix();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(spec.mass_norm(sum - f) < 1e-10);

  // orthogonal cluster projects to zero
  Vec p1 = project(spec, spec.eigenvectors.col(0), 1);
  CHECK(spec.mass_norm(p1) < 1e-12);
}

TEST_CASE("fractional power on eigenfunctions and identity at alpha=1") {
  auto m = build_flat_torus({4, 4});
  auto spec = decompose(m);

  // eigenfunction with lambda = 2 scales by sqrt(2) under alpha = 1/2
  int k2 = -1;
  for (int k = 0; k < spec.n_clusters(); ++k)
    if (std::abs(spec.clusters[k].eigenvalue - 2.0) < 1e-9) k2 = k;
  REQUIRE(k2 >= 0);
  Vec phi = spec.eigenvectors.col(spec.clusters[k2].col_begin);
  Vec got = frac_power_apply(spec, 0.5, phi);
  CHECK(spec.mass_norm(got - std::sqrt(2.0) * phi) < 1e-10);

  // constants die
  Vec c = Vec::Constant(16, 3.25);
  CHECK(spec.mass_norm(frac_power_apply(spec, 0.5, c)) < 1e-12);

  // alpha = 1 equals the direct Laplacian application M^{-1} L f
  Vec f = random_vec(16, 9);
  Vec lhs = frac_power_apply(spec, 1.0, f);
  Vec rhs = m.apply_minus_delta(f);
  CHECK(spec.mass_norm(lhs - rhs) < 1e-10);
}

TEST_CASE("inverse fractional power") {
  auto m = build_flat_torus({4, 4});
  auto spec = decompose(m);
  Vec phi1 = spec.eigenvectors.col(spec.clusters[1].col_begin);
  const double lam1 = spec.clusters[1].eigenvalue;

  Vec got = inv_frac_power_apply(spec, 0.7, phi1);
  CHECK(spec.mass_norm(got - std::pow(lam1, -0.7) * phi1) < 1e-10);

  CHECK_THROWS_AS(inv_frac_power_apply(spec, 0.5, Vec::Constant(16, 1.0)),
                  std::invalid_argument);

  Vec f = random_vec(16, 10);
  f -= spec.eigenvectors.col(0) * spec.coefficients(f)[0];
  Vec round = frac_power_apply(spec, 0.31, inv_frac_power_apply(spec, 0.31, f));
  CHECK(spec.mass_norm(round - f) < 1e-9);
}

TEST_CASE("heat semigroup") {
  auto m = perturb_metric(build_flat_torus({3, 5}), 4, 0.3);
  auto spec = decompose(m);
  Vec f = random_vec(15, 77);

  SUBCASE("t = 0 is the identity") {
    CHECK(spec.mass_norm(heat_apply(spec, 0.0, f) - f) < 1e-12);
  }
  SUBCASE("constants are fixed") {
    Vec c = Vec::Constant(15, -2.0);
    CHECK(spec.mass_norm(heat_apply(spec, 1.7, c) - c) < 1e-12);
  }
  SUBCASE("semigroup law") {
    Vec a = heat_apply(spec, 0.4, heat_apply(spec, 0.9, f));
    Vec b = heat_apply(spec, 1.3, f);
    CHECK(spec.mass_norm(a - b) < 1e-10);
  }
  SUBCASE("spectral decay bound for mean-zero data") {
    Vec f0 = f - spec.eigenvectors.col(0) * spec.coefficients(f)[0];
    for (double t : {0.1, 1.0, 3.0})
      CHECK(spec.mass_norm(heat_apply(spec, t, f0)) <=
            std::exp(-spec.lambda_1() * t) * spec.mass_norm(f0) + 1e-12);
  }
  SUBCASE("L-infinity contraction") {
    for (double t : {0.05, 0.5, 2.0})
      CHECK(heat_apply(spec, t, f).cwiseAbs().maxCoeff() <=
            f.cwiseAbs().maxCoeff() + 1e-12);
  }
  SUBCASE("commutes with the fractional power") {
    Vec a = frac_power_apply(spec, 0.6, heat_apply(spec, 0.8, f));
    Vec b = heat_apply(spec, 0.8, frac_power_apply(spec, 0.6, f));
    CHECK(spec.mass_norm(a - b) < 1e-10);
  }
}

TEST_CASE("heat kernel entries") {
  auto m = build_cycle(16);
  auto spec = decompose(m);

  // stochastic completeness: rows mass-sum to 1
  for (int x : {0, 7}) {
    double acc = 0.0;
    for (int y = 0; y < 16; ++y)
      acc += m.mass[y] * heat_kernel_entry(spec, 0.1, x, y);
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
  }
  // symmetry
  CHECK(heat_kernel_entry(spec, 0.37, 2, 11) ==
        doctest::Approx(heat_kernel_entry(spec, 0.37, 11, 2)).epsilon(1e-12));

  // off-diagonal decay in distance: monotone up to the antipode and a
  // log-linear fit in d^2/t with positive rate
  const double t = 0.1;
  std::vector<double> vals;
  for (int d = 1; d <= 8; ++d)
    vals.push_back(heat_kernel_entry(spec, t, 0, d));
  for (size_t i = 0; i + 1 < vals.size(); ++i) CHECK(vals[i] > vals[i + 1]);
  CHECK(vals[7] < 1e-8 * vals[0]);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int d = 1; d <= 6; ++d) {
    const double x = d * d / t, y = std::log(vals[d - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (6 * sxy - sx * sy) / (6 * sxx - sx * sx);
  CHECK(slope < 0.0);
}

TEST_CASE("spectral wave evolution") {
  auto m = build_flat_torus({4, 4});
  auto spec = decompose(m);
  Vec f = random_vec(16, 12);
  CHECK(spec.mass_norm(wave_evolve_spectral(spec, f, 0.0) - f) < 1e-12);

  Vec phi = spec.eigenvectors.col(spec.clusters[1].col_begin);
  const double lam = spec.clusters[1].eigenvalue;
  Vec got = wave_evolve_spectral(spec, phi, 1.3);
  CHECK(spec.mass_norm(got - std::cos(std::sqrt(lam) * 1.3) * phi) < 1e-10);
}

TEST_CASE("local wave solver: exact cone and amplitude cross-check") {
  auto m = build_cycle(16);
  auto spec = decompose(m);
  Vec f = Vec::Zero(16);
  f[0] = 1.0;
  auto ws = wave_evolve_local(m, f, 6.0 * wave_dt_limit(m), 1.0);

  auto bfs = oracle::bfs_distances(m, 0);
  for (int s = 0; s <= std::min(ws.steps, 8); ++s)
    for (int v = 0; v < 16; ++v)
      if (bfs[v] > s) CHECK(ws.snapshots(v, s) == 0.0);

  CHECK_THROWS_WITH_AS(wave_evolve_local(m, f, 1.0, 1.5),
                       doctest::Contains("stability limit"),
                       std::invalid_argument);

  // amplitudes agree with the spectral propagator as dt -> 0 (2nd order)
  const double T = 1.0;
  Vec exact = wave_evolve_spectral(spec, f, T);
  auto fine = wave_evolve_local(m, f, T, 0.02);
  Vec approx = fine.snapshots.col(fine.steps);
  CHECK(spec.mass_norm(approx - exact) < 5e-3);
}

TEST_CASE("sobolev norm") {
  auto m = build_flat_torus({4, 4});
  auto spec = decompose(m);
  Vec f = random_vec(16, 21);
  CHECK(sobolev_norm(spec, 0.0, f) ==
        doctest::Approx(spec.mass_norm(f)).epsilon(1e-12));

  Vec phi = spec.eigenvectors.col(spec.clusters[2].col_begin);
  const double lam = spec.clusters[2].eigenvalue;
  for (double s : {-1.0, 0.5, 2.0})
    CHECK(sobolev_norm(spec, s, phi) ==
          doctest::Approx(std::pow(1.0 + lam, 0.5 * s)).epsilon(1e-10));

  // monotone in s on a grid
  double prev = 0.0;
  bool first = true;
  for (double s = -2.0; s <= 2.0; s += 0.25) {
    const double v = sobolev_norm(spec, s, f);
    if (!first) CHECK(v >= prev - 1e-12);
    prev = v;
    first = false;
  }
}

TEST_CASE("diagnostic curves are well formed") {
  auto m = build_flat_torus({4, 4});
  auto spec = decompose(m);
  auto wey = weyl_curve(spec, 2);
  CHECK(wey.size() == static_cast<size_t>(spec.n_clusters()));
  CHECK(wey.back()[1] == 16.0);
  auto sup = supnorm_curve(spec, 2);
  CHECK(sup.size() == wey.size());
}
