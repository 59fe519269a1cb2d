#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "cdlevp/harness.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cdlevp;
using doctest::Approx;

namespace {

std::vector<double> unit(Index n, Index j, double scale = 1.0) {
  std::vector<double> e(n, 0.0);
  e[j] = scale;
  return e;
}

std::filesystem::path scratch_dir(const char* name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

int count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

struct Instance {
  DenseSymmetric a;
  ReferenceSolution ref;
  explicit Instance(Index n, double l1 = 108.0, std::uint64_t seed = 1)
      : a(build_synthetic(SpectrumSpec::leading_plus_uniform(n, l1, seed))),
        ref(reference_eigenpair(a)) {}
};

}  // namespace

TEST_CASE("eps_obj") {
  CHECK(eps_obj(5.0, 5.0) == 0.0);
  CHECK(eps_obj(10.0, 5.0) == 1.0);
  CHECK(eps_obj(5.0 - 1e-12, 5.0) == 0.0);
  CHECK_THROWS_AS(eps_obj(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(eps_obj(1.0, -1.0), std::invalid_argument);

  const Instance in(40);
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(in.ref.v1.data(), 40);
  x *= std::sqrt(in.ref.lambda1) * (1 + 1e-3);
  const std::vector<double> xs(x.data(), x.data() + 40);
  const double f = testsupport::f_direct(in.a.matrix(), xs);
  CHECK(eps_obj(f, in.ref.fstar) == Approx(std::sqrt((f - in.ref.fstar) / in.ref.fstar)));
  // Rescaling along v1 changes only the quartic term: f - f* = lambda1^2 ((1+d)^2 - 1)^2.
  const double d = 1e-3;
  const double want = in.ref.lambda1 * ((1 + d) * (1 + d) - 1);
  CHECK(eps_obj(f, in.ref.fstar) == Approx(want / std::sqrt(in.ref.fstar)).epsilon(1e-6));
}

TEST_CASE("projected energy") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 1;
  const DenseSymmetric a(d);
  const SolverState st = init_state(a, std::vector<double>{1, 0});
  CHECK(*projected_energy(st, std::vector<double>{1, 0}) == 2.0);
  CHECK(*projected_energy(st, Index{0}) == 2.0);
  CHECK_FALSE(projected_energy(st, std::vector<double>{0, 1}).has_value());
  CHECK_FALSE(projected_energy(st, Index{1}).has_value());

  const Instance in(30);
  const SolverState sv = init_state(in.a, in.ref.v1);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t)
    CHECK(*projected_energy(sv, testsupport::random_vector(30, rng)) ==
          Approx(in.ref.lambda1).epsilon(1e-9));
  CHECK(eps_energy(110.0, 100.0) == Approx(0.1));
  CHECK(eps_energy(-90.0, -100.0) == Approx(0.1));
}

TEST_CASE("eps_tan") {
  const Instance in(20);
  Eigen::MatrixXd vecs = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(in.a.matrix()).eigenvectors();
  const Eigen::VectorXd v1 = vecs.col(19), v2 = vecs.col(18);
  auto as_std = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  CHECK(eps_tan(as_std(3.0 * v1), as_std(v1)) < 1e-14);
  CHECK(eps_tan(as_std(-3.0 * v1), as_std(v1)) < 1e-14);
  CHECK(std::isinf(eps_tan(as_std(v2), std::vector<double>(unit(20, 0)))) == false);
  const std::vector<double> e0 = unit(2, 0), e1 = unit(2, 1);
  CHECK(std::isinf(eps_tan(e1, e0)));
  CHECK(eps_tan(as_std(v1 + 0.1 * v2), as_std(v1)) == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("maintained objective matches a from-scratch evaluation") {
  const Instance in(100);
  SolverState st = init_state(in.a, unit(100, 0), 3);
  StrategyConfig cfg{PickRule::GradPower, UpdateRule::CoordLS};
  for (int chunk = 0; chunk < 20; ++chunk) {
    for (int i = 0; i < 250; ++i) step(in.a, st, cfg);
    const double gap = in.ref.lambda1 * in.ref.lambda1 - 2.0 * st.s + st.nu * st.nu;
    const double f_direct = testsupport::f_direct(in.a.matrix(), st.x);
    CHECK(in.ref.fstar + gap == Approx(f_direct).epsilon(1e-12));
    const double e_direct = eps_obj(f_direct, in.ref.fstar);
    if (e_direct > 1e-4) CHECK(eps_obj(in.ref.fstar + gap, in.ref.fstar) == Approx(e_direct).epsilon(1e-6));
  }
}

TEST_CASE("power method iterations follow the eigenvalue ratio") {
  const Instance in(500);
  const Method pm = parse_method("PM");
  ExperimentConfig cfg;
  const auto x0 = unit(500, 0);
  const ExperimentResult r = run_experiment(in.a, in.ref, pm, x0, cfg);
  REQUIRE(r.runs[0].outcome == Outcome::Converged);
  const double f0 = testsupport::f_direct(in.a.matrix(), x0);
  const double eps0 = eps_obj(f0, in.ref.fstar);
  const double predicted = std::log(cfg.tol / eps0) / std::log(in.ref.lambda2 / in.ref.lambda1);
  const double got = static_cast<double>(r.stats.med_iters);
  CHECK(got >= predicted / 2);
  CHECK(got <= predicted * 2);
  CHECK(r.stats.total_col_access == 500 * r.stats.med_iters);
  CHECK(r.runs[0].col_accesses == r.stats.total_col_access);
  CHECK(r.runs[0].nu == Approx(in.ref.lambda1).epsilon(1e-5));
}

TEST_CASE("deterministic methods run once") {
  const Instance in(100);
  ExperimentConfig cfg;
  cfg.seeds = {0, 1, 2, 3, 4};
  for (const char* name : {"GCD-LS-LS", "GCD-Grad-LS"}) {
    const ExperimentResult r = run_experiment(in.a, in.ref, parse_method(name), unit(100, 0), cfg);
    CHECK(r.runs.size() == 1);
    CHECK(r.stats.seeds_used == 1);
    CHECK(r.stats.converged == 1);
    CHECK(r.stats.min_iters == r.stats.med_iters);
    CHECK(r.stats.med_iters == r.stats.max_iters);
    CHECK(r.stats.total_col_access == r.stats.med_iters);
    CHECK(r.runs[0].eps_obj < 1e-6);
    CHECK(r.runs[0].nu == Approx(in.ref.lambda1).epsilon(1e-5));
  }
}

TEST_CASE("stochastic runs: statistics, determinism and threads") {
  const Instance in(100);
  ExperimentConfig cfg;
  cfg.seeds = {0, 1, 2, 3, 4, 5};
  cfg.trace_every = 100;
  const Method m = parse_method("SCD-Grad-LS(1)");
  const ExperimentResult a = run_experiment(in.a, in.ref, m, unit(100, 0), cfg);
  cfg.threads = 3;
  const ExperimentResult b = run_experiment(in.a, in.ref, m, unit(100, 0), cfg);
  REQUIRE(a.runs.size() == 6);
  CHECK(a.stats.converged == 6);
  CHECK(a.stats.min_iters <= a.stats.med_iters);
  CHECK(a.stats.med_iters <= a.stats.max_iters);
  std::vector<std::uint64_t> iters;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a.runs[i].trace == b.runs[i].trace);
    CHECK(a.runs[i].iterations == b.runs[i].iterations);
    iters.push_back(a.runs[i].iterations);
    for (std::size_t p = 1; p < a.runs[i].trace.size(); ++p)
      CHECK(a.runs[i].trace[p - 1].col_access <= a.runs[i].trace[p].col_access);
  }
  std::sort(iters.begin(), iters.end());
  CHECK(a.stats.med_iters == iters[2]);  // lower median of six
  CHECK(a.runs[0].iterations != a.runs[1].iterations);
}

TEST_CASE("budget law") {
  const Instance in(100);
  StrategyConfig base;
  base.k = 4;
  base.averaged = true;
  ExperimentConfig cfg;
  cfg.max_col_access = 201;
  cfg.seeds = {0, 1};
  const ExperimentResult r =
      run_experiment(in.a, in.ref, parse_method("SCD-Grad-LS(1)", base), unit(100, 0), cfg);
  for (const SeedResult& s : r.runs) {
    CHECK(s.outcome == Outcome::BudgetExhausted);
    CHECK(s.col_accesses <= cfg.max_col_access + 4);
    CHECK(s.col_accesses == 4 * s.iterations);
  }
  CHECK(r.stats.budget_count == 2);
  CHECK(r.stats.converged == 0);

  cfg.max_col_access = 50000;
  const SeedResult pm = run_seed(in.a, in.ref, parse_method("PM"), unit(100, 0), cfg, 0);
  CHECK(pm.col_accesses <= cfg.max_col_access + 100);
}

TEST_CASE("divergence and stalls are detected") {
  const Instance in(50);
  StrategyConfig base;
  base.gamma = 1.0;
  ExperimentConfig cfg;
  cfg.seeds = {0};
  CHECK_THROWS_AS(
      run_experiment(in.a, in.ref, parse_method("CD-Cyc-Grad", base), unit(50, 0, 5.0), cfg),
      std::runtime_error);
  const SeedResult d = run_seed(in.a, in.ref, parse_method("CD-Cyc-Grad", base), unit(50, 0, 5.0), cfg, 0);
  CHECK(d.outcome == Outcome::Diverged);

  // A stationary start far from the minimizer.
  const SeedResult s = run_seed(in.a, in.ref, parse_method("GCD-Grad-LS"), std::vector<double>(50, 0.0), cfg, 0);
  CHECK(s.outcome == Outcome::Stationary);

  const Instance big(500);
  StrategyConfig naive;
  naive.k = 4;
  naive.allow_naive_batch = true;
  cfg.max_col_access = 4'000'000;
  const SeedResult st = run_seed(big.a, big.ref, parse_method("GCD-LS-LS", naive), unit(500, 0), cfg, 0);
  CHECK((st.outcome == Outcome::Stalled || st.outcome == Outcome::Diverged));
}

TEST_CASE("summaries use converged seeds only") {
  std::vector<SeedResult> runs(5);
  const Outcome oc[] = {Outcome::Converged, Outcome::Diverged, Outcome::Converged,
                        Outcome::BudgetExhausted, Outcome::Converged};
  const std::uint64_t it[] = {30, 1, 10, 99, 20};
  for (int i = 0; i < 5; ++i) {
    runs[static_cast<std::size_t>(i)].outcome = oc[i];
    runs[static_cast<std::size_t>(i)].iterations = it[i];
  }
  const RunStats s = summarize(runs, 4);
  CHECK(s.min_iters == 10);
  CHECK(s.med_iters == 20);
  CHECK(s.max_iters == 30);
  CHECK(s.total_col_access == 80);
  CHECK(s.seeds_used == 5);
  CHECK(s.converged == 3);
  CHECK(s.diverged_count == 1);
  CHECK(s.budget_count == 1);
  CHECK(std::string(to_string(Outcome::Stalled)) == "stalled");
}

TEST_CASE("trace and summary CSV") {
  const auto dir = scratch_dir("cdlevp_harness_test");
  SUBCASE("empty trace is a header") {
    emit_trace({}, dir / "empty.csv");
    CHECK(count_lines(dir / "empty.csv") == 1);
    CHECK(read_trace(dir / "empty.csv").empty());
  }
  SUBCASE("round trip is exact") {
    std::vector<TraceRecord> t{{0, 0, 1.0 / 3.0, 0.1, std::numeric_limits<double>::infinity(), 2e-300},
                               {17, 68, 1675432.123456789, 9.87654321e-7, 1e-9, 3.14159}};
    emit_trace(t, dir / "sub" / "t.csv");
    CHECK(count_lines(dir / "sub" / "t.csv") == 3);
    CHECK(read_trace(dir / "sub" / "t.csv") == t);
    std::ifstream in(dir / "sub" / "t.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,col_access,f,eps_obj,eps_energy,eps_tan");
  }
  SUBCASE("summary round trip") {
    std::vector<SummaryRow> rows(2);
    rows[0].method = "SCD-Grad-LS(1)";
    rows[0].k = 4;
    rows[0].stats.min_iters = 3;
    rows[0].stats.med_iters = 5;
    rows[0].stats.max_iters = 9;
    rows[0].stats.total_col_access = 20;
    rows[1].method = "PM";
    const auto back = (emit_summary(rows, dir / "s.csv"), read_summary(dir / "s.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].method == "SCD-Grad-LS(1)");
    CHECK(back[0].k == 4);
    CHECK(back[0].stats.med_iters == 5);
    CHECK(back[0].stats.total_col_access == 20);
    CHECK(back[1].method == "PM");
    std::ifstream in(dir / "s.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "Method,k,MinIter,MedIter,MaxIter,TotalColAccess");
  }
  SUBCASE("errors carry the path") {
    std::ofstream(dir / "bad.csv") << "nope\n";
    try {
      read_trace(dir / "bad.csv");
      FAIL("accepted");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
    }
    CHECK_THROWS_AS(read_trace(dir / "missing.csv"), std::runtime_error);
    std::ofstream(dir / "blocker") << "x";
    CHECK_THROWS_AS(emit_trace({}, dir / "blocker" / "t.csv"), std::runtime_error);
  }
  std::filesystem::remove_all(dir);
}
