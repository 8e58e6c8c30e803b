#pragma once

// Test-only oracles, independent of the library code paths they grade:
// closed-form torus spectra, BFS distances, a Lanczos log-gamma, adaptive
// Simpson quadrature, and a QR-based orthonormalization reference.

#include "fraclab/manifold.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <vector>

namespace oracle {

using fraclab::DiscreteManifold;
using fraclab::Mat;
using fraclab::Vec;

// Multiset of torus eigenvalues from the per-axis closed form
// 2 - 2 cos(2 pi j / N), summed over axes.
inline std::vector<double> torus_eigenvalues(const std::vector<int>& sides,
                                             double conductance = 1.0) {
  std::vector<double> acc = {0.0};
  for (int N : sides) {
    std::vector<double> axis;
    for (int j = 0; j < N; ++j)
      axis.push_back(conductance * (2.0 - 2.0 * std::cos(2.0 * M_PI * j / N)));
    std::vector<double> next;
    for (double a : acc)
      for (double b : axis) next.push_back(a + b);
    acc = std::move(next);
  }
  std::sort(acc.begin(), acc.end());
  return acc;
}

// cluster tolerance -> (eigenvalue, multiplicity) list
inline std::vector<std::pair<double, int>> cluster(
    const std::vector<double>& vals, double tol = 1e-9) {
  std::vector<std::pair<double, int>> out;
  for (double v : vals) {
    if (!out.empty() && v - out.back().first <= tol * (1.0 + v))
      ++out.back().second;
    else
      out.emplace_back(v, 1);
  }
  return out;
}

// unit-hop BFS distances from src
inline std::vector<int> bfs_distances(const DiscreteManifold& m, int src) {
  std::vector<int> dist(m.n_vertices, -1);
  std::queue<int> q;
  dist[src] = 0;
  q.push(src);
  auto adj = m.adjacency();
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (auto [w, c] : adj[v])
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
  }
  return dist;
}

// Lanczos(g=7, n=9) log-gamma, independent of std::lgamma/std::tgamma
inline double lanczos_gamma(double x) {
  static const double g = 7.0;
  static const double coef[9] = {0.99999999999980993,  676.5203681218851,
                                 -1259.1392167224028,  771.32342877765313,
                                 -176.61502916214059,  12.507343278686905,
                                 -0.13857109526572012, 9.9843695780195716e-6,
                                 1.5056327351493116e-7};
  if (x < 0.5)
    return M_PI / (std::sin(M_PI * x) * lanczos_gamma(1.0 - x));
  x -= 1.0;
  double a = coef[0];
  const double t = x + g + 0.5;
  for (int i = 1; i < 9; ++i) a += coef[i] / (x + i);
  return std::sqrt(2.0 * M_PI) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

// adaptive Simpson on [a, b]
inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol = 1e-12,
                               int depth = 40) {
  const double c = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fc = f(c);
  std::function<double(double, double, double, double, double, double, int)>
      rec = [&](double lo, double hi, double flo, double fhi, double fmid,
                double eps, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
    const double flm = f(lmid), frm = f(rmid);
    const double s = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double sl = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double sr = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(sl + sr - s) < 15.0 * eps) return sl + sr;
    return rec(lo, mid, flo, fmid, flm, 0.5 * eps, d - 1) +
           rec(mid, hi, fmid, fhi, frm, 0.5 * eps, d - 1);
  };
  return rec(a, b, fa, fb, fc, tol, depth);
}

// mass-weighted QR orthonormalization (reference for joint Gram-Schmidt)
inline Mat mass_qr(const Mat& A, const Vec& mass) {
  Vec s = mass.array().sqrt();
  Mat B = s.asDiagonal() * A;
  Eigen::HouseholderQR<Mat> qr(B);
  Mat Q = qr.householderQ() * Mat::Identity(B.rows(), B.cols());
  Mat R = Q.transpose() * B;
  // fix signs so diag(R) > 0, matching classical Gram-Schmidt output
  for (int k = 0; k < Q.cols(); ++k)
    if (R(k, k) < 0.0) Q.col(k) *= -1.0;
  return Mat(s.array().inverse().matrix().asDiagonal() * Q);
}

}  // namespace oracle
