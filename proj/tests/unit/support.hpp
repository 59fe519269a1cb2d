#pragma once

// Independent reference computations shared by the unit tests. Nothing here
// calls into the solver code paths it is used to check.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

namespace testsupport {

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
  return m;
}

/// Random symmetric matrix whose top eigenvalue is positive and simple.
inline Eigen::MatrixXd random_assumption1(int n, std::mt19937_64& rng) {
  for (;;) {
    Eigen::MatrixXd m = random_symmetric(n, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev[n - 1] > 0.0 && (n == 1 || ev[n - 1] - ev[n - 2] > 1e-3)) return m;
  }
}

inline std::vector<double> random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& e : v) e = g(rng);
  return v;
}

/// |A - x x^T|_F^2 summed entry by entry.
inline double f_direct(const Eigen::MatrixXd& a, const std::vector<double>& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double r = a(i, j) - x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
      total += r * r;
    }
  return total;
}

inline double f_along(const Eigen::MatrixXd& a, std::vector<double> x, std::size_t j, double alpha) {
  x[j] += alpha;
  return f_direct(a, x);
}

/// Minimizes any smooth 1-D function on [lo, hi]: a dense grid, then
/// golden-section refinement and a few secant-Newton steps on the
/// best cell. Returns the argmin.
template <class F>
double grid_minimize(F&& h, double lo, double hi, int points = 20001) {
  double best_a = lo, best_h = h(lo);
  const double step = (hi - lo) / (points - 1);
  for (int i = 1; i < points; ++i) {
    const double a = lo + step * i;
    const double v = h(a);
    if (v < best_h) {
      best_h = v;
      best_a = a;
    }
  }
  double l = best_a - step, r = best_a + step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = r - phi * (r - l), d = l + phi * (r - l);
  double hc = h(c), hd = h(d);
  for (int it = 0; it < 200; ++it) {
    if (hc < hd) {
      r = d;
      d = c;
      hd = hc;
      c = r - phi * (r - l);
      hc = h(c);
    } else {
      l = c;
      c = d;
      hc = hd;
      d = l + phi * (r - l);
      hd = h(d);
    }
  }
  double a = 0.5 * (l + r);
  // Newton on h' from central differences.
  for (int it = 0; it < 3; ++it) {
    const double e = 1e-5 * std::max(1.0, std::abs(a));
    const double d1 = (h(a + e) - h(a - e)) / (2 * e);
    const double d2 = (h(a + e) - 2 * h(a) + h(a - e)) / (e * e);
    if (!(d2 > 0.0)) break;
    const double next = a - d1 / d2;
    if (h(next) <= h(a)) a = next;
  }
  return h(a) < best_h ? a : best_a;
}

}  // namespace testsupport
