#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdlevp/engine.hpp"
#include "cdlevp/oracle.hpp"

namespace cdlevp {

/// f(x) = |A|_F^2 - 2 x^T A x + (x^T x)^2, with x^T A x from one uncounted
/// pass over the columns.
double objective(const ColumnOracle& a, std::span<const double> x, double frob_sq);
/// Same value from the maintained s and nu.
double objective(const SolverState& st, double frob_sq);

/// -4 z + 4 nu x.
std::vector<double> gradient(std::span<const double> x, std::span<const double> z, double nu);

/// (-4A + 8 x x^T + 4 x^T x I) w.
std::vector<double> hessian_apply(const ColumnOracle& a, std::span<const double> x,
                                  std::span<const double> w);

/// Dense Hessian at x.
Eigen::MatrixXd hessian_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& x);

/// sqrt(lambda) v after checking lambda > 0, |v| = 1 and A v = lambda v.
std::vector<double> stationary_point(const ColumnOracle& a, double lambda,
                                     std::span<const double> v);

struct LandscapeConstants {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double L = 0.0;          ///< coordinate-wise Lipschitz constant near the minimizers
  double mu2 = 0.0;        ///< strong convexity near the minimizers
  double radiusB = 0.0;    ///< radius of the balls around +-sqrt(lambda1) v1
  double gamma_max = 0.0;  ///< stepsize bound for CD-Cyc-Grad
};

LandscapeConstants constants(const ColumnOracle& a, double lambda1, double lambda2);

struct MultistartReport {
  int starts = 0;
  int second_order_points = 0;  ///< converged with |grad| < tol and Hessian >= 0
  int at_global = 0;            ///< of those, within match_tol of +-sqrt(lambda1) v1
  double worst_distance = 0.0;  ///< largest distance of a second-order point to the minimizer set
};

/// Cyclic exact line search from Gaussian starts scaled to |x| = sqrt(lambda1),
/// then Newton polish; classifies every limit point. Meant for n <= 8.
MultistartReport multistart_second_order_points(const DenseSymmetric& a, int starts,
                                                std::uint64_t seed, double grad_tol = 1e-8,
                                                double match_tol = 1e-5);

}  // namespace cdlevp
