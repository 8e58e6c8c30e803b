#pragma once

// Explicit leapfrog wave integrator on the graph.  The update stencil touches
// one hop per step, so the influence cone grows exactly one hop per step;
// finite-speed claims are tested against this solver, with the spectral
// cosine propagator cross-checking amplitudes.

#include "fraclab/manifold.hpp"

namespace fraclab {

struct WaveTimeSeries {
  double dt = 0.0;
  int steps = 0;
  Mat snapshots;             // column s = solution after s steps (column 0 = f)
  std::vector<double> times;
};

/// Stability limit dt_max = 2 / sqrt(upper bound on spec(M^{-1} L)).
double wave_dt_limit(const DiscreteManifold& m);

/// Leapfrog with zero initial velocity, dt = cfl * wave_dt_limit(m).
/// cfl must lie in (0, 1]; violation is rejected reporting the limit.
WaveTimeSeries wave_evolve_local(const DiscreteManifold& m, const Vec& f,
                                 double T, double cfl);

}  // namespace fraclab
