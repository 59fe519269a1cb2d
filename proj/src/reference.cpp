#include "cdlevp/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace cdlevp {
namespace {

Eigen::MatrixXd assemble(const ColumnOracle& a) {
  if (const auto* d = dynamic_cast<const DenseSymmetric*>(&a)) return d->matrix();
  const auto n = static_cast<Eigen::Index>(a.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  ColumnBuffer buf;
  for (Eigen::Index j = 0; j < n; ++j)
    a.peek_column(static_cast<Index>(j), buf).for_each([&](Index i, double v) {
      m(static_cast<Eigen::Index>(i), j) = v;
    });
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

void apply_uncounted(const ColumnOracle& a, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  ColumnBuffer buf;
  for (Index j = 0; j < a.dim(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    a.peek_column(j, buf).for_each([&](Index i, double v) { y[i] += v * xj; });
  }
}

DenseEigen dense_eigen(const ColumnOracle& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble(a));
  if (es.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed");
  // Eigen returns ascending order.
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

LanczosResult lanczos_top2(const ColumnOracle& a, const LanczosOptions& opt,
                           std::span<const double> start) {
  const Index n = a.dim();
  const std::size_t max_basis =
      std::clamp<std::size_t>(opt.memory_budget_doubles / std::max<Index>(n, 1), 8,
                              std::max<std::size_t>(8, std::min<std::size_t>(opt.max_basis, n)));

  std::vector<double> v0(n);
  if (start.size() == n) {
    std::copy(start.begin(), start.end(), v0.begin());
  } else {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g;
    for (double& e : v0) e = g(rng);
  }

  LanczosResult res;
  std::vector<std::vector<double>> basis;
  std::vector<double> w(n);
  for (std::size_t restart = 0; restart <= opt.max_restarts; ++restart) {
    const double nrm0 = std::sqrt(dot(v0, v0));
    if (nrm0 == 0.0) throw ConvergenceError("lanczos: zero start vector");
    for (double& e : v0) e /= nrm0;
    basis.assign(1, v0);
    std::vector<double> alpha, beta;

    for (std::size_t m = 0;; ++m) {
      apply_uncounted(a, basis[m], w);
      ++res.matvecs;
      alpha.push_back(dot(basis[m], w));
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
          const double c = dot(b, w);
          for (Index i = 0; i < n; ++i) w[i] -= c * b[i];
        }
      const double b_next = std::sqrt(dot(w, w));
      const std::size_t dim_t = m + 1;
      const bool full = dim_t >= max_basis || dim_t >= n;
      const bool breakdown = b_next <= 1e-14 * std::max(1.0, std::abs(alpha.front()));
      if (dim_t % 5 != 0 && !full && !breakdown) {
        beta.push_back(b_next);
        for (double& e : w) e /= b_next;
        basis.push_back(w);
        continue;
      }

      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), dim_t);
      Eigen::VectorXd sub(std::max<std::size_t>(dim_t, 1) - 1);
      for (std::size_t i = 0; i + 1 < dim_t; ++i) sub[i] = beta[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
      es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      const auto top = static_cast<Eigen::Index>(dim_t - 1);
      const double th1 = es.eigenvalues()[top];
      const double th2 = dim_t > 1 ? es.eigenvalues()[top - 1] : th1;
      const double r1 = std::abs(b_next * es.eigenvectors()(top, top));
      const double r2 = dim_t > 1 ? std::abs(b_next * es.eigenvectors()(top, top - 1)) : 0.0;
      const bool converged = breakdown || (r1 <= opt.tol * std::max(1.0, std::abs(th1)) &&
                                           r2 <= opt.tol * std::max(1.0, std::abs(th2)));

      if (converged || full) {
        std::vector<double> u1(n, 0.0), u2(n, 0.0);
        for (std::size_t k = 0; k < dim_t; ++k) {
          const double c1 = es.eigenvectors()(static_cast<Eigen::Index>(k), top);
          const double c2 = dim_t > 1 ? es.eigenvectors()(static_cast<Eigen::Index>(k), top - 1) : 0.0;
          for (Index i = 0; i < n; ++i) {
            u1[i] += c1 * basis[k][i];
            u2[i] += c2 * basis[k][i];
          }
        }
        res.theta1 = th1;
        res.theta2 = th2;
        if (converged || dim_t >= n) {
          const double nu = std::sqrt(dot(u1, u1));
          for (double& e : u1) e /= nu;
          res.u1 = std::move(u1);
          res.residual1 = r1;
          return res;
        }
        for (Index i = 0; i < n; ++i) v0[i] = u1[i] + u2[i];
        break;
      }
      beta.push_back(b_next);
      for (double& e : w) e /= b_next;
      basis.push_back(w);
    }
  }
  throw ConvergenceError("lanczos: no convergence after " + std::to_string(opt.max_restarts) +
                         " restarts");
}

ReferenceSolution reference_eigenpair(const ColumnOracle& a, std::size_t dense_limit,
                                      const LanczosOptions& opt) {
  ReferenceSolution ref;
  const Index n = a.dim();
  if (n <= dense_limit) {
    const DenseEigen eig = dense_eigen(a);
    ref.lambda1 = eig.values[0];
    ref.lambda2 = n > 1 ? eig.values[1] : -std::numeric_limits<double>::infinity();
    ref.v1.assign(eig.vectors.col(0).data(), eig.vectors.col(0).data() + n);
    ref.source = ReferenceSolution::Source::Dense;
  } else {
    LanczosResult lr = lanczos_top2(a, opt);
    ref.lambda1 = lr.theta1;
    ref.lambda2 = lr.theta2;
    ref.v1 = std::move(lr.u1);
    ref.source = ReferenceSolution::Source::Lanczos;
  }
  // Fix the sign so the largest-magnitude entry is positive.
  const auto big = std::max_element(ref.v1.begin(), ref.v1.end(),
                                    [](double x, double y) { return std::abs(x) < std::abs(y); });
  if (big != ref.v1.end() && *big < 0)
    for (double& e : ref.v1) e = -e;
  if (!(ref.lambda1 > 0.0))
    throw std::invalid_argument("reference_eigenpair: largest eigenvalue is not positive");
  ref.frob_sq = frobenius_norm_sq(a);
  ref.fstar = ref.frob_sq - ref.lambda1 * ref.lambda1;
  return ref;
}

}  // namespace cdlevp
