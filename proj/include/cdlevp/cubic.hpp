#pragma once

#include <array>
#include <cstddef>

namespace cdlevp {

/// Monic cubic a^3 + b a^2 + c a + d. It is h'(a)/4 for the quartic
/// h(a) = a^4 + (4b/3) a^3 + 2c a^2 + 4d a.
struct CubicCoeffs {
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

struct CubicRoots {
  std::array<double, 3> r{};  ///< ascending, first `count` entries valid
  std::size_t count = 0;
};

/// Real roots by the Cardano / trigonometric closed form, each polished
/// with two Newton steps. A double root is reported twice.
CubicRoots real_roots(const CubicCoeffs& q);

/// h(a), i.e. the change of the objective for a move of size a.
double delta_f(double alpha, const CubicCoeffs& q);

/// Root of the cubic that minimizes h. With three real roots the outer
/// root farther from the middle one wins; exact ties fall back to the
/// lower h and then to the smaller root.
double solve_cubic_min(const CubicCoeffs& q);

}  // namespace cdlevp
