#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "cdlevp/reference.hpp"
#include "run_config.hpp"
#include "verify.hpp"

using namespace cdlevp;
using namespace cdlevp::cli;

namespace {

// Flags shared by solve and bench. Only flags given on the command line
// override the JSON config.
struct RunFlags {
  std::string matrix, synthetic, hubbard_spec, method, x0, out, config;
  double shift = 0.0, scale = 1.0, t = 1.0, gamma = 0.0, tol = 1e-6;
  std::size_t k = 1;
  bool replacement = true, averaged = false, naive_batch = false;
  std::uint64_t max_col_access = 0, seeds = 1, trace_every = 0;
  unsigned threads = 1;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App& app) {
    opts["matrix"] = app.add_option("--matrix", matrix, "dense matrix file");
    opts["synthetic"] = app.add_option("--synthetic", synthetic, "n=500,l1=108[,lo=1,hi=100,seed=1]");
    opts["hubbard"] = app.add_option("--hubbard", hubbard_spec, "l1=4,l2=4,nup=3,ndown=3[,u=4,t=1,cache=N]");
    opts["shift"] = app.add_option("--shift", shift, "b in a*A + b*I");
    opts["scale"] = app.add_option("--scale", scale, "a in a*A + b*I");
    opts["method"] = app.add_option("--method", method, "method name, e.g. GCD-LS-LS or SCD-Grad-LS(1)");
    opts["t"] = app.add_option("--t", t, "sampling power");
    opts["k"] = app.add_option("--k", k, "coordinates per iteration")->check(CLI::PositiveNumber);
    opts["gamma"] = app.add_option("--gamma", gamma, "fixed stepsize for *-Grad updates");
    opts["replacement"] = app.add_option("--replacement", replacement, "sample with replacement");
    opts["averaged"] = app.add_option("--averaged", averaged, "divide batch steps by k");
    opts["naive_batch"] = app.add_flag("--naive-batch", naive_batch, "allow non-averaged greedy batches");
    opts["x0"] = app.add_option("--x0", x0, "e<j>, AMP*e<j>, 10e_HF or file:PATH");
    opts["tol"] = app.add_option("--tol", tol, "stop when eps_obj < tol");
    opts["max_col_access"] = app.add_option("--max-col-access", max_col_access, "column access budget");
    opts["seeds"] = app.add_option("--seeds", seeds, "number of seeds (0..N-1)");
    opts["trace_every"] = app.add_option("--trace-every", trace_every, "trace interval in iterations");
    opts["threads"] = app.add_option("--threads", threads, "worker threads across seeds");
    opts["out"] = app.add_option("--out", out, "output directory");
    opts["config"] = app.add_option("--config", config, "JSON run configuration");
  }

  bool given(const char* key) const { return opts.at(key)->count() > 0; }

  nlohmann::json load_config() const {
    if (!given("config")) return nlohmann::json::object();
    std::ifstream in(config);
    if (!in) throw UsageError("cannot open config " + config);
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config " + config + ": " + e.what());
    }
  }

  RunConfig resolve(const nlohmann::json& j) const {
    RunConfig c;
    c.merge_json(j);
    const int sources = given("matrix") + given("synthetic") + given("hubbard");
    if (sources > 1) throw UsageError("give exactly one of --matrix, --synthetic, --hubbard");
    if (given("matrix")) c.source = SourceKind::Dense, c.source_arg = matrix;
    if (given("synthetic")) c.source = SourceKind::Synthetic, c.source_arg = synthetic;
    if (given("hubbard")) c.source = SourceKind::Hubbard, c.source_arg = hubbard_spec;
    if (given("shift")) c.shift = shift;
    if (given("scale")) c.scale = scale;
    if (given("method")) c.method = method;
    if (given("t")) c.strategy.t = t;
    if (given("k")) c.strategy.k = k;
    if (given("gamma")) c.strategy.gamma = gamma;
    if (given("replacement")) c.strategy.with_replacement = replacement;
    if (given("averaged")) c.strategy.averaged = averaged;
    if (given("naive_batch")) c.strategy.allow_naive_batch = naive_batch;
    if (given("x0")) c.x0 = x0;
    if (given("tol")) c.tol = tol;
    if (given("max_col_access")) c.max_col_access = max_col_access;
    if (given("seeds")) c.seeds = seeds;
    if (given("trace_every")) c.trace_every = trace_every;
    if (given("threads")) c.threads = threads;
    if (given("out")) c.out = out;
    return c;
  }
};

std::string file_stem(const Method& m) {
  std::string s = m.name;
  for (char& ch : s)
    if (ch == '(' || ch == ')') ch = '_';
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s + "_k" + std::to_string(m.cfg.k);
}

void write_traces(const std::filesystem::path& dir, const Method& m, const ExperimentResult& r) {
  for (const SeedResult& s : r.runs)
    emit_trace(s.trace, dir / (file_stem(m) + "_seed" + std::to_string(s.seed) + ".csv"));
}

const SeedResult* representative(const ExperimentResult& r) {
  for (const SeedResult& s : r.runs)
    if (s.outcome == Outcome::Converged && s.iterations == r.stats.med_iters) return &s;
  return r.runs.empty() ? nullptr : &r.runs.front();
}

void print_stats(const Method& m, const ExperimentResult& r) {
  std::printf("%-20s k=%-3zu converged %zu/%zu  iterations %llu/%llu/%llu  column accesses %llu\n",
              m.name.c_str(), m.cfg.k, r.stats.converged, r.stats.seeds_used,
              static_cast<unsigned long long>(r.stats.min_iters),
              static_cast<unsigned long long>(r.stats.med_iters),
              static_cast<unsigned long long>(r.stats.max_iters),
              static_cast<unsigned long long>(r.stats.total_col_access));
  if (r.stats.diverged_count + r.stats.budget_count > 0)
    std::printf("%-20s diverged or stalled %zu, out of budget or stationary %zu\n", "", r.stats.diverged_count,
                r.stats.budget_count);
}

Method method_of(const RunConfig& c) { return parse_method(c.method, c.strategy); }

int cmd_solve(const RunFlags& flags) {
  const RunConfig c = flags.resolve(flags.load_config());
  c.validate();
  const Problem p = build_problem(c);
  const auto x0 = build_x0(c, p);
  const ReferenceSolution ref = reference_eigenpair(*p.op);
  const Method m = method_of(c);
  std::printf("operator: %s\n", p.description.c_str());
  std::printf("reference lambda1 %.12g  lambda2 %.12g\n", ref.lambda1, ref.lambda2);
  ExperimentResult r;
  try {
    r = run_experiment(*p.op, ref, m, x0, c.experiment());
  } catch (const std::runtime_error& e) {
    std::printf("%s: %s\n", m.name.c_str(), e.what());
    return 1;
  }
  print_stats(m, r);
  const SeedResult* s = representative(r);
  std::printf("lambda %.12g  (outcome %s, eps_obj %.3g, f %.12g)\n", s->nu, to_string(s->outcome), s->eps_obj,
              s->f);
  if (p.hubbard) {
    const double a = c.scale.value_or(-1.0), b = c.shift.value_or(100.0);
    std::printf("energy %.12g\n", (s->nu - b) / a);
  }
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    emit_summary(std::vector<SummaryRow>{{m.name, m.cfg.k, r.stats}}, c.out / "summary.csv");
    write_traces(c.out, m, r);
  }
  return r.stats.converged > 0 ? 0 : 1;
}

int cmd_bench(const RunFlags& flags) {
  const nlohmann::json j = flags.load_config();
  const RunConfig top = flags.resolve(j);
  nlohmann::json methods = j.contains("methods") ? j.at("methods") : nlohmann::json::array();
  if (!methods.is_array()) throw UsageError("config: 'methods' must be an array");
  if (methods.empty()) methods.push_back(top.method);

  std::vector<RunConfig> runs;
  for (const auto& entry : methods) {
    RunConfig c = top;
    if (entry.is_string()) c.method = entry.get<std::string>();
    else if (entry.is_object()) {
      for (const char* k : {"matrix", "synthetic", "hubbard", "scale", "shift", "out", "methods"})
        if (entry.contains(k)) throw UsageError(std::string("config: '") + k + "' is not allowed per method");
      c.merge_json(entry);
    } else throw UsageError("config: methods entries are names or objects");
    c.validate();
    runs.push_back(c);
  }
  const Problem p = build_problem(top);
  const ReferenceSolution ref = reference_eigenpair(*p.op);
  const std::filesystem::path out = top.out.empty() ? "bench_out" : top.out;
  std::filesystem::create_directories(out);
  std::printf("operator: %s\n", p.description.c_str());
  std::printf("reference lambda1 %.12g  lambda2 %.12g\n", ref.lambda1, ref.lambda2);

  std::vector<SummaryRow> rows;
  int failed = 0;
  for (const RunConfig& c : runs) {
    const Method m = method_of(c);
    const auto x0 = build_x0(c, p);
    try {
      const ExperimentResult r = run_experiment(*p.op, ref, m, x0, c.experiment());
      print_stats(m, r);
      rows.push_back({m.name, m.cfg.k, r.stats});
      write_traces(out, m, r);
      failed += r.stats.converged == 0;
    } catch (const std::runtime_error& e) {
      std::printf("%-20s k=%-3zu %s\n", m.name.c_str(), m.cfg.k, e.what());
      ++failed;
    }
  }
  emit_summary(rows, out / "summary.csv");
  std::printf("summary written to %s\n", (out / "summary.csv").string().c_str());
  return failed == 0 ? 0 : 1;
}

int cmd_hubbard_info(const std::vector<int>& l, int nup, int ndown, double u, double thop, bool ground) {
  hubbard::LatticeSpec s;
  s.l1 = l.at(0);
  s.l2 = l.at(1);
  s.n_up = nup;
  s.n_down = ndown;
  s.u = u;
  s.t_hop = thop;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const hubbard::HubbardOracle h(s);
  const hubbard::ColumnStats st = column_stats(h);
  const hubbard::Momentum k = h.basis().sector();
  std::printf("Lattice %dx%d, %d+%d electrons, U=%g, t=%g\n", s.l1, s.l2, s.n_up, s.n_down, s.u, s.t_hop);
  std::printf("Sector (%d,%d)\n", k.k1, k.k2);
  std::printf("Dim %zu\n", static_cast<std::size_t>(h.dim()));
  std::printf("nnz min %zu, med %zu, max %zu\n", st.nnz_min, st.nnz_median, st.nnz_max);
  std::printf("diagonal min %.6g, max %.6g\n", st.diag_min, st.diag_max);
  std::printf("off-diagonals all +-U/N: %s\n", st.offdiag_all_pm_u_over_n ? "yes" : "no");
  std::printf("HF index %zu, HF diagonal %.6g\n", static_cast<std::size_t>(h.hf_index()), h.diag(h.hf_index()));
  if (ground) {
    const hubbard::GroundState g = hubbard::ground_state_reference(h);
    std::printf("ground energy %.10g, second energy %.10g\n", g.energy, g.second_energy);
  }
  return 0;
}

int cmd_gen(const std::string& spec, const std::string& out) {
  const SyntheticSpec s = parse_synthetic(spec);
  const DenseSymmetric a =
      build_synthetic(SpectrumSpec::leading_plus_uniform(s.n, s.lambda1, s.seed, s.lo, s.hi));
  const std::filesystem::path path(out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_dense(a, path);
  std::printf("wrote %zu x %zu matrix to %s\n", static_cast<std::size_t>(a.dim()),
              static_cast<std::size_t>(a.dim()), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate descent for the leading eigenvalue problem"};
  app.require_subcommand(1);

  RunFlags solve_flags, bench_flags;
  CLI::App* solve = app.add_subcommand("solve", "run one method and print the eigenvalue estimate");
  solve_flags.add(*solve);
  CLI::App* bench = app.add_subcommand("bench", "run a suite of methods, write summary and traces");
  bench_flags.add(*bench);

  CLI::App* hub = app.add_subcommand("hubbard", "Hubbard model utilities");
  hub->require_subcommand(1);
  CLI::App* info = hub->add_subcommand("info", "sector dimension and column statistics");
  std::vector<int> l{4, 4};
  int nup = 3, ndown = 3;
  double u = 4.0, thop = 1.0;
  bool ground = false;
  info->add_option("--l", l, "lattice extents L1 L2")->expected(2);
  info->add_option("--nup", nup, "spin-up electrons");
  info->add_option("--ndown", ndown, "spin-down electrons");
  info->add_option("--u", u, "on-site interaction");
  info->add_option("--thop", thop, "hopping amplitude");
  info->add_flag("--ground", ground, "also compute the two lowest energies");

  CLI::App* verify = app.add_subcommand("verify", "run the landscape and engine invariant checks");
  unsigned verify_seed = 1;
  verify->add_option("--seed", verify_seed, "random instance seed");

  CLI::App* gen = app.add_subcommand("gen", "write a synthetic dense matrix");
  std::string gen_spec, gen_out;
  gen->add_option("--synthetic", gen_spec, "n=500,l1=108[,lo=1,hi=100,seed=1]")->required();
  gen->add_option("--out", gen_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_flags);
    if (bench->parsed()) return cmd_bench(bench_flags);
    if (info->parsed()) return cmd_hubbard_info(l, nup, ndown, u, thop, ground);
    if (verify->parsed()) return run_verify(std::cout, verify_seed) == 0 ? 0 : 1;
    if (gen->parsed()) return cmd_gen(gen_spec, gen_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
