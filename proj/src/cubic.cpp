#include "cdlevp/cubic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cdlevp {
namespace {

double eval(const CubicCoeffs& q, double a) { return ((a + q.b) * a + q.c) * a + q.d; }

double polish(const CubicCoeffs& q, double a) {
  for (int it = 0; it < 2; ++it) {
    const double g = eval(q, a);
    const double dg = (3.0 * a + 2.0 * q.b) * a + q.c;
    if (g == 0.0 || dg == 0.0) break;
    const double next = a - g / dg;
    if (!std::isfinite(next) || std::abs(eval(q, next)) > std::abs(g)) break;
    a = next;
  }
  return a;
}

}  // namespace

CubicRoots real_roots(const CubicCoeffs& q) {
  // Depressed form t^3 + p t + r with a = t - b/3.
  const double shift = q.b / 3.0;
  const double p = q.c - q.b * shift;
  const double r = (2.0 * shift * shift - q.c) * shift + q.d;

  CubicRoots out;
  if (p == 0.0 && r == 0.0) {
    out.r = {-shift, -shift, -shift};
    out.count = 3;
    return out;
  }
  const double half = -0.5 * r;
  const double disc = half * half + (p / 3.0) * (p / 3.0) * (p / 3.0);
  if (disc > 0.0) {
    const double u = std::cbrt(half + std::copysign(std::sqrt(disc), half));
    out.r[0] = polish(q, u - p / (3.0 * u) - shift);
    out.count = 1;
    return out;
  }
  const double m = 2.0 * std::sqrt(-p / 3.0);
  const double arg = std::clamp(3.0 * r / (p * m), -1.0, 1.0);
  const double theta = std::acos(arg) / 3.0;
  for (int k = 0; k < 3; ++k)
    out.r[k] = m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - shift;
  std::sort(out.r.begin(), out.r.end());
  for (double& x : out.r) x = polish(q, x);
  std::sort(out.r.begin(), out.r.end());
  out.count = 3;
  return out;
}

double delta_f(double alpha, const CubicCoeffs& q) {
  const double a = alpha;
  return (((a + 4.0 * q.b / 3.0) * a + 2.0 * q.c) * a + 4.0 * q.d) * a;
}

double solve_cubic_min(const CubicCoeffs& q) {
  const CubicRoots rt = real_roots(q);
  if (rt.count == 1) return rt.r[0];
  const double lo = rt.r[0], mid = rt.r[1], hi = rt.r[2];
  const double left = mid - lo, right = hi - mid;
  const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
  if (std::abs(left - right) > 1e-12 * scale) return left > right ? lo : hi;
  const double h_lo = delta_f(lo, q), h_hi = delta_f(hi, q);
  return h_hi < h_lo ? hi : lo;
}

}  // namespace cdlevp
