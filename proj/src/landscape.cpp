#include "cdlevp/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cdlevp/reference.hpp"

namespace cdlevp {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

double objective(const ColumnOracle& a, std::span<const double> x, double frob_sq) {
  std::vector<double> ax(x.size());
  apply_uncounted(a, x, ax);
  const double nu = dot(x, x);
  return frob_sq - 2.0 * dot(x, ax) + nu * nu;
}

double objective(const SolverState& st, double frob_sq) { return st.objective(frob_sq); }

std::vector<double> gradient(std::span<const double> x, std::span<const double> z, double nu) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = 4.0 * (nu * x[i] - z[i]);
  return g;
}

std::vector<double> hessian_apply(const ColumnOracle& a, std::span<const double> x,
                                  std::span<const double> w) {
  std::vector<double> aw(w.size());
  apply_uncounted(a, w, aw);
  const double xw = dot(x, w), nu = dot(x, x);
  for (std::size_t i = 0; i < w.size(); ++i) aw[i] = -4.0 * aw[i] + 8.0 * x[i] * xw + 4.0 * nu * w[i];
  return aw;
}

Eigen::MatrixXd hessian_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  const auto n = a.rows();
  return -4.0 * a + 8.0 * x * x.transpose() + 4.0 * x.squaredNorm() * Eigen::MatrixXd::Identity(n, n);
}

std::vector<double> stationary_point(const ColumnOracle& a, double lambda,
                                     std::span<const double> v) {
  if (!(lambda > 0.0)) throw std::invalid_argument("stationary_point: eigenvalue must be positive");
  if (v.size() != a.dim()) throw std::invalid_argument("stationary_point: dimension mismatch");
  if (std::abs(std::sqrt(dot(v, v)) - 1.0) > 1e-8)
    throw std::invalid_argument("stationary_point: v is not a unit vector");
  std::vector<double> av(v.size());
  apply_uncounted(a, v, av);
  double res = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) res += (av[i] - lambda * v[i]) * (av[i] - lambda * v[i]);
  if (std::sqrt(res) > 1e-8 * std::max(1.0, std::abs(lambda)))
    throw std::invalid_argument("stationary_point: (lambda, v) is not an eigenpair");
  std::vector<double> x(v.begin(), v.end());
  const double r = std::sqrt(lambda);
  for (double& e : x) e *= r;
  return x;
}

LandscapeConstants constants(const ColumnOracle& a, double lambda1, double lambda2) {
  if (!(lambda1 > 0.0) || !(lambda1 > lambda2))
    throw std::invalid_argument("constants: need lambda1 > max(0, lambda2)");
  double diag_max = 0.0;
  for (Index j = 0; j < a.dim(); ++j) diag_max = std::max(diag_max, std::abs(a.diag(j)));
  const double gap = std::min(2.0 * lambda1, lambda1 - lambda2);
  LandscapeConstants k;
  k.lambda1 = lambda1;
  k.lambda2 = lambda2;
  k.L = 12.0 * lambda1 + 2.0 * gap + 4.0 * diag_max;
  k.mu2 = 3.0 * gap;
  k.radiusB = gap / (30.0 * std::sqrt(lambda1));
  k.gamma_max = stepsize_bound(a);
  return k;
}

MultistartReport multistart_second_order_points(const DenseSymmetric& a, int starts,
                                                std::uint64_t seed, double grad_tol,
                                                double match_tol) {
  const Eigen::MatrixXd& m = a.matrix();
  const auto n = m.rows();
  const DenseEigen eig = dense_eigen(a);
  const double lambda1 = eig.values[0];
  if (!(lambda1 > 0.0)) throw std::invalid_argument("multistart: largest eigenvalue must be positive");
  const Eigen::VectorXd xstar = std::sqrt(lambda1) * eig.vectors.col(0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  StrategyConfig cyc{PickRule::Cyclic, UpdateRule::CoordLS};
  MultistartReport rep;
  rep.starts = starts;
  for (int s = 0; s < starts; ++s) {
    std::vector<double> x0(static_cast<std::size_t>(n));
    for (double& e : x0) e = g(rng);
    const double scale = std::sqrt(lambda1 / dot(x0, x0));
    for (double& e : x0) e *= scale;

    SolverState st = init_state(a, x0);
    for (int sweep = 0; sweep < 20000; ++sweep) {
      for (Eigen::Index i = 0; i < n; ++i) step(a, st, cyc);
      revalidate(a, st);
      const auto gr = gradient(st.x, st.z, st.nu);
      if (std::sqrt(dot(gr, gr)) < 1e-6) break;
    }
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(st.x.data(), n);
    for (int it = 0; it < 20; ++it) {
      const Eigen::VectorXd grad = -4.0 * m * x + 4.0 * x.squaredNorm() * x;
      if (grad.norm() < 1e-3 * grad_tol) break;
      const Eigen::VectorXd dx = hessian_dense(m, x).fullPivLu().solve(-grad);
      if (!dx.allFinite()) break;
      x += dx;
    }
    const Eigen::VectorXd grad = -4.0 * m * x + 4.0 * x.squaredNorm() * x;
    if (grad.norm() >= grad_tol) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hs(hessian_dense(m, x), Eigen::EigenvaluesOnly);
    if (hs.eigenvalues()[0] < -1e-8 * std::max(1.0, lambda1)) continue;
    ++rep.second_order_points;
    const double dist = std::min((x - xstar).norm(), (x + xstar).norm());
    rep.worst_distance = std::max(rep.worst_distance, dist);
    if (dist <= match_tol) ++rep.at_global;
  }
  return rep;
}

}  // namespace cdlevp
