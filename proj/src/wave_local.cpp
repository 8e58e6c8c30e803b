#include "fraclab/wave_local.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fraclab {

double wave_dt_limit(const DiscreteManifold& m) {
  // Gershgorin: spec(M^{-1} L) <= 2 max_i (sum_j c_ij) / m_i
  Vec row_sum = Vec::Zero(m.n_vertices);
  for (const Edge& e : m.edges) {
    row_sum[e.i] += e.conductance;
    row_sum[e.j] += e.conductance;
  }
  const double lam_bound = 2.0 * (row_sum.array() / m.mass.array()).maxCoeff();
  return 2.0 / std::sqrt(lam_bound);
}

WaveTimeSeries wave_evolve_local(const DiscreteManifold& m, const Vec& f,
                                 double T, double cfl) {
  const double dt_limit = wave_dt_limit(m);
  if (!(cfl > 0.0) || cfl > 1.0)
    throw std::invalid_argument(
        "wave_evolve_local: cfl " + std::to_string(cfl) +
        " outside (0,1]; stability limit dt_max = " + std::to_string(dt_limit));
  if (!(T >= 0.0)) throw std::invalid_argument("wave_evolve_local: T < 0");

  WaveTimeSeries out;
  out.dt = cfl * dt_limit;
  out.steps = (T == 0.0) ? 0 : static_cast<int>(std::ceil(T / out.dt));
  out.snapshots = Mat(m.n_vertices, out.steps + 1);
  out.times.resize(out.steps + 1);

  Vec prev = f;
  out.snapshots.col(0) = prev;
  out.times[0] = 0.0;
  if (out.steps == 0) return out;

  // first step from u_t(0) = 0: u(dt) = u(0) - dt^2/2 (-Delta) u(0)
  Vec curr = prev - (0.5 * out.dt * out.dt) * m.apply_minus_delta(prev);
  out.snapshots.col(1) = curr;
  out.times[1] = out.dt;
  for (int s = 2; s <= out.steps; ++s) {
    Vec next =
        2.0 * curr - prev - (out.dt * out.dt) * m.apply_minus_delta(curr);
    prev.swap(curr);
    curr.swap(next);
    out.snapshots.col(s) = curr;
    out.times[s] = s * out.dt;
  }
  return out;
}

}  // namespace fraclab
