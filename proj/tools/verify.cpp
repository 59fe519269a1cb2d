#include "verify.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "cdlevp/engine.hpp"
#include "cdlevp/landscape.hpp"

namespace cdlevp::cli {

namespace {

std::string sci(double v) {
  std::ostringstream o;
  o.precision(2);
  o << std::scientific << v;
  return o.str();
}

Eigen::MatrixXd random_top_simple(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev[n - 1] > 0.0 && ev[n - 1] - ev[n - 2] > 1e-3) return m;
  }
}

std::vector<double> random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& e : v) e = g(rng);
  return v;
}

double objective_direct(const Eigen::MatrixXd& a, const std::vector<double>& x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return (a - v * v.transpose()).squaredNorm();
}

bool stationary_points(std::mt19937_64& rng, std::string& note) {
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::MatrixXd m = random_top_simple(20, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (int i = 0; i < 20; ++i) {
      const double lam = es.eigenvalues()[i];
      if (lam <= 0.0) continue;
      const Eigen::VectorXd x = std::sqrt(lam) * es.eigenvectors().col(i);
      const Eigen::VectorXd z = m * x;
      const auto g = gradient(std::vector<double>(x.data(), x.data() + 20),
                              std::vector<double>(z.data(), z.data() + 20), x.squaredNorm());
      worst = std::max(worst, Eigen::Map<const Eigen::VectorXd>(g.data(), 20).norm());
    }
  }
  note = "max |grad| at scaled eigenvectors " + sci(worst);
  return worst < 1e-8;
}

bool saddle_curvature(std::mt19937_64& rng, std::string& note) {
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::MatrixXd m = random_top_simple(20, rng);
    const DenseSymmetric a(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd v1 = es.eigenvectors().col(19);
    const std::vector<double> v1s(v1.data(), v1.data() + 20);
    for (int i = 0; i < 19; ++i) {
      const double lam = es.eigenvalues()[i];
      if (lam <= 0.0) continue;
      const Eigen::VectorXd x = std::sqrt(lam) * es.eigenvectors().col(i);
      const auto hv = hessian_apply(a, std::vector<double>(x.data(), x.data() + 20), v1s);
      const double got = v1.dot(Eigen::Map<const Eigen::VectorXd>(hv.data(), 20));
      const double want = 4.0 * (lam - es.eigenvalues()[19]);
      worst = std::max(worst, std::abs(got - want) / std::abs(want));
    }
  }
  note = "max relative error of negative curvature " + sci(worst);
  return worst <= 1e-6;
}

bool multistart(std::mt19937_64& rng, std::string& note) {
  int points = 0, global = 0;
  for (int n = 2; n <= 6; ++n) {
    const MultistartReport r = multistart_second_order_points(DenseSymmetric(random_top_simple(n, rng)), 40, rng());
    points += r.second_order_points;
    global += r.at_global;
  }
  note = std::to_string(global) + "/" + std::to_string(points) + " second-order points are global minimizers";
  return points > 0 && global == points;
}

bool line_search(std::mt19937_64& rng, std::string& note) {
  double worst_gap = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 2 + static_cast<int>(rng() % 6);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
    const DenseSymmetric a(m);
    const auto x = random_vec(n, rng);
    const SolverState st = init_state(a, x);
    const Index j = rng() % static_cast<Index>(n);
    const double alpha = coord_ls_delta(st, j, m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
    auto h = [&](double t) {
      auto y = x;
      y[j] += t;
      return objective_direct(m, y);
    };
    const double best = h(alpha);
    for (int k = -4000; k <= 4000; ++k) worst_gap = std::max(worst_gap, best - h(k * 2e-3));
  }
  note = "worst excess over an 8001-point grid " + sci(worst_gap);
  return worst_gap <= 1e-9;
}

bool descent(std::mt19937_64& rng, std::string& note) {
  const Eigen::MatrixXd m = random_top_simple(25, rng);
  const DenseSymmetric a(m);
  const double frob = m.squaredNorm();
  const auto x0 = random_vec(25, rng);
  int increases = 0;
  double drift = 0.0;
  StrategyConfig averaged{PickRule::GreedyLS, UpdateRule::CoordLS};
  averaged.k = 3;
  averaged.averaged = true;
  StrategyConfig vec{PickRule::GradPower, UpdateRule::VecLS};
  vec.k = 4;
  const StrategyConfig configs[] = {{PickRule::Cyclic, UpdateRule::CoordLS},
                                    {PickRule::GaussSouthwell, UpdateRule::CoordLS},
                                    {PickRule::GreedyLS, UpdateRule::CoordLS},
                                    {PickRule::GradPower, UpdateRule::CoordLS},
                                    averaged,
                                    vec,
                                    {PickRule::All, UpdateRule::VecLS}};
  for (const StrategyConfig& cfg : configs) {
    SolverState st = init_state(a, x0, 7);
    double f = st.objective(frob);
    for (int it = 0; it < 3000; ++it) {
      try {
        step(a, st, cfg);
      } catch (const StationaryPoint&) {
        break;
      }
      const double fn = st.objective(frob);
      increases += fn > f + 1e-12 * (1.0 + std::abs(f));
      f = fn;
    }
    drift = std::max(drift, std::abs(f - objective_direct(m, st.x)) / (1.0 + std::abs(f)));
  }
  note = std::to_string(increases) + " objective increases over 7 line-search strategies, max drift " +
         sci(drift);
  return increases == 0 && drift < 1e-8;
}

bool access_accounting(std::mt19937_64& rng, std::string& note) {
  DenseSymmetric a(random_top_simple(30, rng));
  StrategyConfig cfg{PickRule::GradPower, UpdateRule::CoordLS};
  cfg.k = 4;
  SolverState st = init_state(a, random_vec(30, rng), 3);
  a.reset_access_count();
  for (int it = 0; it < 250; ++it) step(a, st, cfg);
  note = "accesses after 250 batches of 4: " + std::to_string(a.access_count());
  return a.access_count() == 1000 && st.col_accesses == 1000;
}

}  // namespace

int run_verify(std::ostream& out, unsigned seed) {
  std::mt19937_64 rng(seed);
  const std::pair<const char*, std::function<bool(std::mt19937_64&, std::string&)>> checks[] = {
      {"stationary points", stationary_points}, {"saddle curvature", saddle_curvature},
      {"multistart minimizers", multistart},    {"coordinate line search", line_search},
      {"monotone descent", descent},            {"column access accounting", access_accounting},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    std::string note;
    bool ok = false;
    try {
      ok = fn(rng, note);
    } catch (const std::exception& e) {
      note = std::string("exception: ") + e.what();
    }
    failures += !ok;
    out << (ok ? "ok   " : "FAIL ") << name << ": " << note << "\n";
  }
  return failures;
}

}  // namespace cdlevp::cli
