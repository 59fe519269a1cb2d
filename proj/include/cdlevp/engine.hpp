#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cdlevp/cubic.hpp"
#include "cdlevp/oracle.hpp"

namespace cdlevp {

enum class PickRule { Cyclic, Uniform, GradPower, GaussSouthwell, GreedyLS, All };
enum class UpdateRule { FixedGrad, CoordLS, VecLS };

struct StrategyConfig {
  PickRule pick = PickRule::GaussSouthwell;
  UpdateRule update = UpdateRule::CoordLS;
  double t = 1.0;      ///< sampling power for GradPower
  double gamma = 0.0;  ///< FixedGrad stepsize
  std::size_t k = 1;
  bool with_replacement = true;
  bool averaged = false;
  /// Lets greedy picks take k > 1 without averaging. Such runs are
  /// expected to stall and exist to exhibit that.
  bool allow_naive_batch = false;

  /// Throws std::invalid_argument on an inconsistent combination.
  void validate() const;
};

/// Iterate plus the maintained quantities z = A x, nu = |x|^2, s = x^T z.
struct SolverState {
  std::vector<double> x;
  std::vector<double> z;
  double nu = 0.0;
  double s = 0.0;
  std::uint64_t ell = 0;
  std::uint64_t col_accesses = 0;   ///< solver work, excludes init_state
  std::uint64_t init_accesses = 0;  ///< columns read to form z from x0
  std::mt19937_64 rng;

  // Coordinate applications since nu and s were last recomputed.
  std::size_t since_refresh = 0;
  ColumnBuffer buf;
  std::vector<double> scores;
  std::vector<double> av;

  Index dim() const noexcept { return x.size(); }
  /// f(x) = |A|_F^2 - 2 s + nu^2.
  double objective(double frob_sq) const noexcept { return frob_sq - 2.0 * s + nu * nu; }
};

/// Raised when a pick finds an all-zero gradient, i.e. x is stationary.
class StationaryPoint : public std::runtime_error {
 public:
  StationaryPoint() : std::runtime_error("iterate is a stationary point") {}
};

/// z = A x0 from the columns with nonzero x0_j, one counted access each.
SolverState init_state(const ColumnOracle& a, std::span<const double> x0, std::uint64_t seed = 0);

/// x_j += alpha with z, nu, s updated from one counted column access.
void apply_coordinate_delta(const ColumnOracle& a, SolverState& st, Index j, double alpha);

/// Recomputes z from x with uncounted reads and resets nu, s.
struct Drift {
  double z = 0.0;   ///< max |z_kept - A x|
  double nu = 0.0;  ///< |nu_kept - |x|^2|
  double s = 0.0;   ///< |s_kept - x^T A x|
};
Drift revalidate(const ColumnOracle& a, SolverState& st);

/// c_j = nu x_j - z_j; the gradient is 4c.
void gradient_scores(const SolverState& st, std::vector<double>& c);
std::vector<double> gradient_scores(const SolverState& st);

Index pick_cyclic(const SolverState& st);

/// k indices with P(j) proportional to |c_j|^t (0^0 = 1). Returns nullopt
/// when every weight vanishes. Without replacement the draws are
/// sequential with drawn indices removed, realized through exponential
/// keys in one pass.
std::optional<std::vector<Index>> pick_grad_power(std::span<const double> c, double t, std::size_t k,
                                                  bool with_replacement, std::mt19937_64& rng);

/// argmax |c_j|, lowest index on ties.
Index pick_gauss_southwell(std::span<const double> c);

/// Cubic of h(a) = f(x + a e_j): b = 3x_j, c = nu + 2x_j^2 - A_jj, d = nu x_j - z_j.
CubicCoeffs coord_cubic(const SolverState& st, Index j, double a_jj);

/// New value of x_j from the depressed cubic b^3 + p b + q with
/// p = nu - x_j^2 - A_jj and q = A_jj x_j - z_j.
double coord_ls_value(const SolverState& st, Index j, double a_jj);

/// Exact line-search increment along e_j.
double coord_ls_delta(const SolverState& st, Index j, double a_jj);

struct GreedyChoice {
  Index j = 0;
  double alpha = 0.0;
  double delta_f = 0.0;
};

/// Exact line search on every coordinate; smallest decrease wins, lowest
/// index on ties (within 1e-15 (1 + nu^2)). Diagonal reads only.
GreedyChoice pick_greedy_ls(const ColumnOracle& a, const SolverState& st);

/// Multi-coordinate variants: the k best coordinates by |c_j| or by the
/// line-search decrease.
std::vector<Index> top_k_gauss_southwell(std::span<const double> c, std::size_t k);
std::vector<GreedyChoice> top_k_greedy_ls(const ColumnOracle& a, const SolverState& st,
                                          std::size_t k);

/// Optimal step along v (v_j = 4 c_j on omega, zero elsewhere), given
/// av = A v as a dense vector.
double vec_ls_alpha(const SolverState& st, std::span<const Index> omega, std::span<const double> v,
                    std::span<const double> av);

struct StepReport {
  std::vector<Index> indices;
  std::vector<double> deltas;
  std::uint64_t col_accesses = 0;
};

/// One iteration of the configured method. Throws StationaryPoint when the
/// pick sees a zero gradient.
StepReport step(const ColumnOracle& a, SolverState& st, const StrategyConfig& cfg);

/// x <- sqrt(rho) u with u = A x / |A x| and rho = u^T A u, using n counted
/// accesses. The rescaling keeps the objective comparable with the
/// coordinate methods. Throws std::runtime_error when A x = 0.
void power_method_step(const ColumnOracle& a, SolverState& st);

/// 1 / (4 (n + 4) R^2) with R^2 = max_j |A_{:,j}|.
double stepsize_bound(const ColumnOracle& a);

}  // namespace cdlevp
