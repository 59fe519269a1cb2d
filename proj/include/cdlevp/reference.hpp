#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cdlevp/oracle.hpp"

namespace cdlevp {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Leading eigenpair used as ground truth by the error metrics.
struct ReferenceSolution {
  enum class Source { Dense, Lanczos };

  double lambda1 = 0.0;
  std::vector<double> v1;
  double lambda2 = 0.0;
  double frob_sq = 0.0;  ///< ||A||_F^2
  double fstar = 0.0;    ///< ||A||_F^2 - lambda1^2, the minimum of ||A - x x^T||_F^2
  Source source = Source::Dense;
};

struct LanczosOptions {
  std::size_t max_basis = 400;
  std::size_t max_restarts = 50;
  double tol = 1e-10;  ///< Ritz residual relative to |theta|
  std::uint64_t seed = 7;
  /// Upper bound on the Krylov basis in doubles; shrinks max_basis for big n.
  std::size_t memory_budget_doubles = std::size_t{64} << 20;
};

struct LanczosResult {
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::vector<double> u1;
  double residual1 = 0.0;
  std::size_t matvecs = 0;
};

/// Two largest eigenvalues of a symmetric oracle by Lanczos with full
/// reorthogonalization, explicitly restarted from the leading Ritz vectors.
/// Column reads are uncounted.
LanczosResult lanczos_top2(const ColumnOracle& a, const LanczosOptions& opt = {},
                           std::span<const double> start = {});

/// Dense path (Householder tridiagonalization + implicit QR) for
/// n <= dense_limit, Lanczos beyond.
ReferenceSolution reference_eigenpair(const ColumnOracle& a, std::size_t dense_limit = 2000,
                                      const LanczosOptions& opt = {});

/// y = A x from one uncounted pass over the columns with nonzero x_j.
void apply_uncounted(const ColumnOracle& a, std::span<const double> x, std::span<double> y);

/// Full symmetric eigendecomposition of a dense oracle, eigenvalues descending.
struct DenseEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
DenseEigen dense_eigen(const ColumnOracle& a);

}  // namespace cdlevp
