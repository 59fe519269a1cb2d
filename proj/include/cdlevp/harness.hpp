#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdlevp/engine.hpp"
#include "cdlevp/method.hpp"
#include "cdlevp/reference.hpp"

namespace cdlevp {

/// sqrt(max(f - f*, 0) / f*).
double eps_obj(double f_value, double fstar);

/// x_ref^T z / x_ref^T x, or nullopt when the overlap vanishes.
std::optional<double> projected_energy(const SolverState& st, std::span<const double> x_ref);
/// Same with x_ref a multiple of e_r: z_r / x_r at O(1) cost.
std::optional<double> projected_energy(const SolverState& st, Index r);

/// |E - lambda1| / |lambda1|.
double eps_energy(double energy, double lambda1);

/// tan of the angle between x and v1; +infinity when they are orthogonal.
double eps_tan(std::span<const double> x, std::span<const double> v1);

struct TraceRecord {
  std::uint64_t iteration = 0;
  std::uint64_t col_access = 0;
  double f = 0.0;
  double eps_obj = 0.0;
  double eps_energy = 0.0;
  double eps_tan = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

enum class Outcome { Converged, BudgetExhausted, Diverged, Stalled, Stationary };
const char* to_string(Outcome o) noexcept;

struct SeedResult {
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::BudgetExhausted;
  std::uint64_t iterations = 0;
  std::uint64_t col_accesses = 0;
  double f = 0.0;
  double eps_obj = 0.0;
  double nu = 0.0;  ///< |x|^2 at exit, the eigenvalue estimate
  std::vector<TraceRecord> trace;
};

struct RunStats {
  std::uint64_t min_iters = 0;
  std::uint64_t med_iters = 0;  ///< lower median over converged seeds
  std::uint64_t max_iters = 0;
  std::uint64_t total_col_access = 0;  ///< accesses per iteration x med_iters
  std::size_t seeds_used = 0;
  std::size_t converged = 0;
  std::size_t diverged_count = 0;  ///< diverged or stalled
  std::size_t budget_count = 0;
};

struct ExperimentConfig {
  double tol = 1e-6;
  std::uint64_t max_col_access = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> seeds{0};
  /// Trace record every this many iterations (0: first and last only).
  std::uint64_t trace_every = 0;
  /// Coordinate of the projected-energy reference vector.
  std::optional<Index> energy_ref;
  /// Iterations without a new lowest objective before declaring a stall.
  std::uint64_t stall_window = 1000;
  double divergence_factor = 1e6;
  unsigned threads = 1;
};

struct ExperimentResult {
  RunStats stats;
  std::vector<SeedResult> runs;
};

/// One seed of `method` from x0. Stops at eps_obj < tol, on the access
/// budget, on divergence or a stall.
SeedResult run_seed(const ColumnOracle& a, const ReferenceSolution& ref, const Method& method,
                    std::span<const double> x0, const ExperimentConfig& cfg, std::uint64_t seed);

/// All seeds (one for deterministic methods), aggregated. Throws
/// std::runtime_error when no seed converges and every seed failed.
ExperimentResult run_experiment(const ColumnOracle& a, const ReferenceSolution& ref,
                                const Method& method, std::span<const double> x0,
                                const ExperimentConfig& cfg);

RunStats summarize(std::span<const SeedResult> runs, std::size_t accesses_per_iteration);

void emit_trace(std::span<const TraceRecord> trace, const std::filesystem::path& path);
std::vector<TraceRecord> read_trace(const std::filesystem::path& path);

struct SummaryRow {
  std::string method;
  std::size_t k = 1;
  RunStats stats;
};
void emit_summary(std::span<const SummaryRow> rows, const std::filesystem::path& path);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

}  // namespace cdlevp
