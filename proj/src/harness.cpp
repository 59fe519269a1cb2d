#include "cdlevp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cdlevp {

double eps_obj(double f_value, double fstar) {
  if (!(fstar > 0.0)) throw std::invalid_argument("eps_obj: f* must be positive");
  return std::sqrt(std::max(f_value - fstar, 0.0) / fstar);
}

std::optional<double> projected_energy(const SolverState& st, std::span<const double> x_ref) {
  const double num = std::inner_product(x_ref.begin(), x_ref.end(), st.z.begin(), 0.0);
  const double den = std::inner_product(x_ref.begin(), x_ref.end(), st.x.begin(), 0.0);
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::optional<double> projected_energy(const SolverState& st, Index r) {
  if (st.x[r] == 0.0) return std::nullopt;
  return st.z[r] / st.x[r];
}

double eps_energy(double energy, double lambda1) { return std::abs(energy - lambda1) / std::abs(lambda1); }

double eps_tan(std::span<const double> x, std::span<const double> v1) {
  const double c = std::inner_product(x.begin(), x.end(), v1.begin(), 0.0);
  if (c == 0.0) return std::numeric_limits<double>::infinity();
  double perp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - c * v1[i];
    perp += r * r;
  }
  return std::sqrt(perp) / std::abs(c);
}

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Converged: return "converged";
    case Outcome::BudgetExhausted: return "budget";
    case Outcome::Diverged: return "diverged";
    case Outcome::Stalled: return "stalled";
    case Outcome::Stationary: return "stationary";
  }
  return "?";
}

SeedResult run_seed(const ColumnOracle& a, const ReferenceSolution& ref, const Method& method,
                    std::span<const double> x0, const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!(ref.fstar > 0.0)) throw std::invalid_argument("run_seed: reference f* must be positive");
  if (!method.power) method.cfg.validate();
  SolverState st = init_state(a, x0, seed);
  const double lam_sq = ref.lambda1 * ref.lambda1;
  // f - f* = lambda1^2 - 2 s + nu^2, free of the large |A|_F^2 term.
  auto gap = [&] { return lam_sq - 2.0 * st.s + st.nu * st.nu; };
  auto eps_of = [&](double g) { return std::sqrt(std::max(g, 0.0) / ref.fstar); };

  Index eref = 0;
  if (cfg.energy_ref) {
    eref = *cfg.energy_ref;
  } else {
    for (Index i = 1; i < x0.size(); ++i)
      if (std::abs(x0[i]) > std::abs(x0[eref])) eref = i;
  }

  SeedResult res;
  res.seed = seed;
  auto record = [&] {
    const double g = gap();
    TraceRecord r;
    r.iteration = st.ell;
    r.col_access = st.col_accesses;
    r.f = ref.fstar + g;
    r.eps_obj = eps_of(g);
    const auto e = projected_energy(st, eref);
    r.eps_energy = e ? eps_energy(*e, ref.lambda1) : std::numeric_limits<double>::infinity();
    r.eps_tan = ref.v1.size() == st.dim() ? eps_tan(st.x, ref.v1)
                                          : std::numeric_limits<double>::quiet_NaN();
    if (!res.trace.empty() && res.trace.back().iteration == r.iteration) res.trace.back() = r;
    else res.trace.push_back(r);
  };
  record();

  double gap_min = gap();
  double f_min = ref.fstar + gap_min;
  std::uint64_t since_best = 0;
  Outcome out = Outcome::BudgetExhausted;
  for (;;) {
    if (eps_of(gap()) < cfg.tol) {
      revalidate(a, st);
      if (eps_of(gap()) < cfg.tol) {
        out = Outcome::Converged;
        break;
      }
    }
    if (st.col_accesses >= cfg.max_col_access) break;
    try {
      if (method.power) power_method_step(a, st);
      else step(a, st, method.cfg);
    } catch (const StationaryPoint&) {
      out = Outcome::Stationary;
      break;
    }
    const double g = gap();
    const double f = ref.fstar + g;
    if (!std::isfinite(f) || f > cfg.divergence_factor * f_min) {
      out = Outcome::Diverged;
      break;
    }
    f_min = std::min(f_min, f);
    if (g < gap_min) {
      gap_min = g;
      since_best = 0;
    } else if (++since_best >= cfg.stall_window) {
      out = Outcome::Stalled;
      break;
    }
    if (cfg.trace_every != 0 && st.ell % cfg.trace_every == 0) record();
  }
  record();

  res.outcome = out;
  res.iterations = st.ell;
  res.col_accesses = st.col_accesses;
  res.f = ref.fstar + gap();
  res.eps_obj = eps_of(gap());
  res.nu = st.nu;
  return res;
}

RunStats summarize(std::span<const SeedResult> runs, std::size_t accesses_per_iteration) {
  RunStats s;
  s.seeds_used = runs.size();
  std::vector<std::uint64_t> iters;
  for (const auto& r : runs) {
    switch (r.outcome) {
      case Outcome::Converged: iters.push_back(r.iterations); break;
      case Outcome::Diverged:
      case Outcome::Stalled: ++s.diverged_count; break;
      case Outcome::BudgetExhausted:
      case Outcome::Stationary: ++s.budget_count; break;
    }
  }
  s.converged = iters.size();
  if (iters.empty()) return s;
  std::sort(iters.begin(), iters.end());
  s.min_iters = iters.front();
  s.max_iters = iters.back();
  s.med_iters = iters[(iters.size() - 1) / 2];
  s.total_col_access = s.med_iters * accesses_per_iteration;
  return s;
}

ExperimentResult run_experiment(const ColumnOracle& a, const ReferenceSolution& ref,
                                const Method& method, std::span<const double> x0,
                                const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (method.deterministic()) seeds.resize(1);

  ExperimentResult out;
  out.runs.resize(seeds.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(seeds.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      out.runs[i] = run_seed(a, ref, method, x0, cfg, seeds[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i; (i = next++) < seeds.size();)
            out.runs[i] = run_seed(a, ref, method, x0, cfg, seeds[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  out.stats = summarize(out.runs, method.accesses_per_iteration(a.dim()));
  if (out.stats.converged == 0 && out.stats.diverged_count == out.runs.size())
    throw std::runtime_error("run_experiment: every seed of " + method.name + " diverged");
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                const std::string& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error("'" + path.string() + "': unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split_csv(line));
  return rows;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

constexpr const char* kTraceHeader = "iteration,col_access,f,eps_obj,eps_energy,eps_tan";
constexpr const char* kSummaryHeader = "Method,k,MinIter,MedIter,MaxIter,TotalColAccess";

}  // namespace

void emit_trace(std::span<const TraceRecord> trace, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kTraceHeader << '\n';
  for (const auto& r : trace)
    out << r.iteration << ',' << r.col_access << ',' << r.f << ',' << r.eps_obj << ','
        << r.eps_energy << ',' << r.eps_tan << '\n';
  finish(out, path);
}

std::vector<TraceRecord> read_trace(const std::filesystem::path& path) {
  std::vector<TraceRecord> out;
  for (const auto& f : read_rows(path, kTraceHeader)) {
    if (f.size() != 6) throw std::runtime_error("'" + path.string() + "': expected 6 fields");
    out.push_back({to_u64(f[0]), to_u64(f[1]), to_double(f[2]), to_double(f[3]), to_double(f[4]),
                   to_double(f[5])});
  }
  return out;
}

void emit_summary(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kSummaryHeader << '\n';
  for (const auto& r : rows)
    out << r.method << ',' << r.k << ',' << r.stats.min_iters << ',' << r.stats.med_iters << ','
        << r.stats.max_iters << ',' << r.stats.total_col_access << '\n';
  finish(out, path);
}

std::vector<SummaryRow> read_summary(const std::filesystem::path& path) {
  std::vector<SummaryRow> out;
  for (const auto& f : read_rows(path, kSummaryHeader)) {
    if (f.size() != 6) throw std::runtime_error("'" + path.string() + "': expected 6 fields");
    SummaryRow r;
    r.method = f[0];
    r.k = to_u64(f[1]);
    r.stats.min_iters = to_u64(f[2]);
    r.stats.med_iters = to_u64(f[3]);
    r.stats.max_iters = to_u64(f[4]);
    r.stats.total_col_access = to_u64(f[5]);
    out.push_back(r);
  }
  return out;
}

}  // namespace cdlevp
