#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cdlevp {

using Index = std::size_t;

/// Read-only view of one matrix column. A dense column carries all `dim()`
/// values in row order and no row indices; a sparse column carries parallel
/// row/value arrays.
struct ColumnView {
  std::span<const Index> rows;
  std::span<const double> values;
  bool dense = false;

  std::size_t nnz() const noexcept { return values.size(); }

  template <class F>
  void for_each(F&& f) const {
    if (dense) {
      for (Index i = 0; i < values.size(); ++i) f(i, values[i]);
    } else {
      for (std::size_t p = 0; p < rows.size(); ++p) f(rows[p], values[p]);
    }
  }

  /// Entry at row i; zero when absent from a sparse column.
  double at(Index i) const noexcept;
};

/// Caller-owned scratch storage an oracle may write a column into.
struct ColumnBuffer {
  std::vector<Index> rows;
  std::vector<double> values;

  ColumnView sparse_view() const { return {rows, values, false}; }
  ColumnView dense_view() const { return {{}, values, true}; }
};

/// Matrix-free symmetric operator. Columns are the unit of cost: every
/// `column()` call bumps the access counter, `peek_column()` and `diag()`
/// never do. Implementations are immutable after construction and safe for
/// concurrent readers, each holding its own ColumnBuffer.
class ColumnOracle {
 public:
  virtual ~ColumnOracle() = default;

  virtual Index dim() const noexcept = 0;
  virtual double diag(Index j) const = 0;

  ColumnView column(Index j, ColumnBuffer& buf) const {
    accesses_.fetch_add(1, std::memory_order_relaxed);
    return fetch_column(j, buf);
  }

  /// Uncounted read, reserved for setup passes and verification.
  ColumnView peek_column(Index j, ColumnBuffer& buf) const { return fetch_column(j, buf); }

  std::uint64_t access_count() const noexcept { return accesses_.load(std::memory_order_relaxed); }
  void reset_access_count() noexcept { accesses_.store(0, std::memory_order_relaxed); }

 protected:
  ColumnOracle() = default;
  ColumnOracle(const ColumnOracle& o) noexcept : accesses_(o.access_count()) {}
  ColumnOracle& operator=(const ColumnOracle& o) noexcept {
    accesses_.store(o.access_count(), std::memory_order_relaxed);
    return *this;
  }

  virtual ColumnView fetch_column(Index j, ColumnBuffer& buf) const = 0;

 private:
  mutable std::atomic<std::uint64_t> accesses_{0};
};

/// Explicitly stored symmetric matrix, full n*n column-major storage.
class DenseSymmetric final : public ColumnOracle {
 public:
  /// Symmetrizes its input as (M + M^T)/2.
  explicit DenseSymmetric(Eigen::MatrixXd m);

  Index dim() const noexcept override { return static_cast<Index>(m_.rows()); }
  double diag(Index j) const override;

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

 protected:
  ColumnView fetch_column(Index j, ColumnBuffer& buf) const override;

 private:
  Eigen::MatrixXd m_;
};

/// Represents scale*M + shift*I without materializing it.
class ShiftScaleOracle final : public ColumnOracle {
 public:
  ShiftScaleOracle(std::shared_ptr<const ColumnOracle> base, double scale, double shift);

  Index dim() const noexcept override { return base_->dim(); }
  double diag(Index j) const override { return scale_ * base_->diag(j) + shift_; }

  double scale() const noexcept { return scale_; }
  double shift() const noexcept { return shift_; }
  const ColumnOracle& base() const noexcept { return *base_; }

 protected:
  ColumnView fetch_column(Index j, ColumnBuffer& buf) const override;

 private:
  std::shared_ptr<const ColumnOracle> base_;
  double scale_;
  double shift_;
};

std::shared_ptr<const ColumnOracle> shift_scale(std::shared_ptr<const ColumnOracle> base,
                                                double scale, double shift);

/// Eigenvalues (non-increasing, lambda_1 > lambda_2, lambda_1 > 0) plus the
/// seed of the random orthogonal eigenbasis.
struct SpectrumSpec {
  std::vector<double> eigenvalues;
  std::uint64_t seed = 0;

  void validate() const;

  /// lambda_1 followed by n-1 values equally spaced on [lo, hi):
  /// lo + (hi - lo) * m / (n - 1), m = n-2 .. 0.
  static SpectrumSpec leading_plus_uniform(Index n, double lambda1, std::uint64_t seed,
                                           double lo = 1.0, double hi = 100.0);
};

/// Q diag(lambda) Q^T with Q the orthogonal QR factor of a seeded Gaussian matrix.
DenseSymmetric build_synthetic(const SpectrumSpec& spec);

/// max_j ||A_{:,j}||_2 in one uncounted pass.
double column_norm_max(const ColumnOracle& a);

/// sum_{i,j} A_ij^2 in one uncounted pass.
double frobenius_norm_sq(const ColumnOracle& a);

/// Whitespace-separated text: n, then n rows of n values.
DenseSymmetric load_dense(const std::filesystem::path& path);
void save_dense(const DenseSymmetric& a, const std::filesystem::path& path);

}  // namespace cdlevp
