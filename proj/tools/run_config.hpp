#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdlevp/harness.hpp"
#include "cdlevp/hubbard.hpp"

namespace cdlevp::cli {

/// Thrown for malformed flags, specs and config files. Exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SourceKind { None, Dense, Synthetic, Hubbard };

struct SyntheticSpec {
  Index n = 500;
  double lambda1 = 108.0;
  double lo = 1.0;
  double hi = 100.0;
  std::uint64_t seed = 1;
};

/// "n=500,l1=108,lo=1,hi=100,seed=1"; missing keys keep their defaults.
SyntheticSpec parse_synthetic(const std::string& text);
/// "l1=4,l2=4,nup=3,ndown=3,u=4,t=1,cache=19600".
hubbard::LatticeSpec parse_lattice(const std::string& text, std::size_t* cache = nullptr);

/// Start vector: "[AMP[*]]e<j>" (1-based), "[AMP[*]]e_HF", or "file:PATH"
/// with one value per line.
struct X0Spec {
  double amplitude = 1.0;
  std::optional<Index> index;  ///< 0-based; empty means the HF determinant
  std::filesystem::path file;
};
X0Spec parse_x0(const std::string& text);

struct RunConfig {
  SourceKind source = SourceKind::None;
  std::string source_arg;  ///< file path or spec string
  std::optional<double> scale;
  std::optional<double> shift;
  std::string method = "GCD-LS-LS";
  StrategyConfig strategy;
  std::optional<std::string> x0;
  double tol = 1e-6;
  std::uint64_t max_col_access = 100'000'000;
  std::uint64_t seeds = 1;
  std::uint64_t trace_every = 0;
  unsigned threads = 1;
  std::filesystem::path out;

  /// Fills fields present in `j`; unknown keys are errors.
  void merge_json(const nlohmann::json& j);
  void validate() const;
  ExperimentConfig experiment() const;
};

/// The operator a*A + b*I a run works on, plus what is needed to describe it.
struct Problem {
  std::shared_ptr<const ColumnOracle> base;
  std::shared_ptr<const ColumnOracle> op;
  std::shared_ptr<const hubbard::HubbardOracle> hubbard;  ///< set for Hubbard sources
  std::string description;
};

Problem build_problem(const RunConfig& cfg);

/// Default e1 for matrices, 10 e_HF for Hubbard.
std::vector<double> build_x0(const RunConfig& cfg, const Problem& p);

}  // namespace cdlevp::cli
