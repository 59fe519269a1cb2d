#include "cdlevp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>
#include <string>

namespace cdlevp {

double ColumnView::at(Index i) const noexcept {
  if (dense) return i < values.size() ? values[i] : 0.0;
  for (std::size_t p = 0; p < rows.size(); ++p)
    if (rows[p] == i) return values[p];
  return 0.0;
}

DenseSymmetric::DenseSymmetric(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("DenseSymmetric: matrix is not square");
  if (m.rows() == 0) throw std::invalid_argument("DenseSymmetric: empty matrix");
  m_ = 0.5 * (m + m.transpose());
}

double DenseSymmetric::diag(Index j) const {
  if (j >= dim()) throw std::out_of_range("DenseSymmetric::diag: index out of range");
  return m_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
}

ColumnView DenseSymmetric::fetch_column(Index j, ColumnBuffer&) const {
  if (j >= dim()) throw std::out_of_range("DenseSymmetric::column: index out of range");
  const double* col = m_.data() + j * dim();
  return {{}, std::span<const double>(col, dim()), true};
}

ShiftScaleOracle::ShiftScaleOracle(std::shared_ptr<const ColumnOracle> base, double scale,
                                   double shift)
    : base_(std::move(base)), scale_(scale), shift_(shift) {
  if (!base_) throw std::invalid_argument("ShiftScaleOracle: null base oracle");
}

ColumnView ShiftScaleOracle::fetch_column(Index j, ColumnBuffer& buf) const {
  const ColumnView src = base_->peek_column(j, buf);
  if (src.dense) {
    // src may alias external storage; copy before scaling.
    if (src.values.data() != buf.values.data()) buf.values.assign(src.values.begin(), src.values.end());
    for (double& v : buf.values) v *= scale_;
    buf.values[j] += shift_;
    return buf.dense_view();
  }
  if (src.rows.data() != buf.rows.data()) {
    buf.rows.assign(src.rows.begin(), src.rows.end());
    buf.values.assign(src.values.begin(), src.values.end());
  }
  bool has_diag = false;
  for (std::size_t p = 0; p < buf.rows.size(); ++p) {
    buf.values[p] *= scale_;
    if (buf.rows[p] == j) {
      buf.values[p] += shift_;
      has_diag = true;
    }
  }
  if (!has_diag && shift_ != 0.0) {
    buf.rows.push_back(j);
    buf.values.push_back(shift_);
  }
  return buf.sparse_view();
}

std::shared_ptr<const ColumnOracle> shift_scale(std::shared_ptr<const ColumnOracle> base,
                                                double scale, double shift) {
  return std::make_shared<ShiftScaleOracle>(std::move(base), scale, shift);
}

void SpectrumSpec::validate() const {
  if (eigenvalues.empty()) throw std::invalid_argument("SpectrumSpec: no eigenvalues");
  if (!(eigenvalues.front() > 0.0))
    throw std::invalid_argument("SpectrumSpec: largest eigenvalue must be positive");
  if (eigenvalues.size() > 1 && !(eigenvalues[0] > eigenvalues[1]))
    throw std::invalid_argument("SpectrumSpec: largest eigenvalue must be simple");
  if (!std::is_sorted(eigenvalues.rbegin(), eigenvalues.rend()))
    throw std::invalid_argument("SpectrumSpec: eigenvalues must be non-increasing");
}

SpectrumSpec SpectrumSpec::leading_plus_uniform(Index n, double lambda1, std::uint64_t seed,
                                                double lo, double hi) {
  if (n == 0) throw std::invalid_argument("SpectrumSpec: n must be positive");
  SpectrumSpec spec;
  spec.seed = seed;
  spec.eigenvalues.reserve(n);
  spec.eigenvalues.push_back(lambda1);
  for (Index m = n - 1; m-- > 0;)
    spec.eigenvalues.push_back(lo + (hi - lo) * static_cast<double>(m) / static_cast<double>(n - 1));
  return spec;
}

DenseSymmetric build_synthetic(const SpectrumSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.eigenvalues.size());
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) g(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::VectorXd lambda =
      Eigen::Map<const Eigen::VectorXd>(spec.eigenvalues.data(), n);
  return DenseSymmetric(q * lambda.asDiagonal() * q.transpose());
}

double column_norm_max(const ColumnOracle& a) {
  ColumnBuffer buf;
  double best = 0.0;
  for (Index j = 0; j < a.dim(); ++j) {
    double sq = 0.0;
    a.peek_column(j, buf).for_each([&](Index, double v) { sq += v * v; });
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

double frobenius_norm_sq(const ColumnOracle& a) {
  ColumnBuffer buf;
  double total = 0.0;
  for (Index j = 0; j < a.dim(); ++j) {
    double sq = 0.0;
    a.peek_column(j, buf).for_each([&](Index, double v) { sq += v * v; });
    total += sq;
  }
  return total;
}

DenseSymmetric load_dense(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path.string() + "'");
  long long n = 0;
  if (!(in >> n) || n <= 0)
    throw std::runtime_error("matrix file '" + path.string() + "': bad dimension header");
  Eigen::MatrixXd m(n, n);
  for (long long r = 0; r < n; ++r)
    for (long long c = 0; c < n; ++c)
      if (!(in >> m(r, c)))
        throw std::runtime_error("matrix file '" + path.string() + "': truncated at row " +
                                 std::to_string(r));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::runtime_error("matrix file '" + path.string() + "': matrix is not symmetric");
  return DenseSymmetric(std::move(m));
}

void save_dense(const DenseSymmetric& a, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write matrix file '" + path.string() + "'");
  const auto& m = a.matrix();
  out << m.rows() << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for matrix file '" + path.string() + "'");
}

}  // namespace cdlevp
