#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cdlevp/oracle.hpp"

namespace cdlevp::hubbard {

/// Periodic L1 x L2 lattice with hopping t and on-site repulsion U.
struct LatticeSpec {
  int l1 = 4;
  int l2 = 4;
  double t_hop = 1.0;
  double u = 4.0;
  int n_up = 3;
  int n_down = 3;

  int n_orb() const noexcept { return l1 * l2; }
  void validate() const;
};

/// Occupation bitmasks over momentum orbitals; bit r set means orbital r is
/// occupied. Orbital r maps to (r / l2, r % l2).
struct Determinant {
  std::uint64_t up = 0;
  std::uint64_t down = 0;

  constexpr auto operator<=>(const Determinant&) const = default;
};

struct DeterminantHash {
  std::size_t operator()(const Determinant& d) const noexcept {
    const std::size_t h = std::hash<std::uint64_t>{}(d.up);
    return h ^ (std::hash<std::uint64_t>{}(d.down) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  }
};

struct Momentum {
  int k1 = 0;
  int k2 = 0;
  constexpr auto operator<=>(const Momentum&) const = default;
};

/// -2 (cos k1 + cos k2) for orbital r.
double dispersion(const LatticeSpec& spec, int orbital);

/// Total momentum of an occupation mask, component-wise mod (l1, l2).
Momentum mask_momentum(const LatticeSpec& spec, std::uint64_t mask);
Momentum total_momentum(const LatticeSpec& spec, const Determinant& d);

/// Lowest-dispersion filling per spin. Degenerate orbitals are taken in
/// order of their folded wave vector (components in (-L/2, L/2]).
Determinant hf_determinant(const LatticeSpec& spec);

/// All determinants sharing the HF determinant's total momentum, sorted by
/// (up, down), with an exact inverse map.
class MomentumBasis {
 public:
  static constexpr std::size_t kDefaultMaxDim = std::size_t{1} << 26;

  explicit MomentumBasis(const LatticeSpec& spec, std::size_t max_dim = kDefaultMaxDim);
  MomentumBasis(const LatticeSpec& spec, Momentum sector, std::size_t max_dim = kDefaultMaxDim);

  std::size_t size() const noexcept { return states_.size(); }
  Momentum sector() const noexcept { return sector_; }
  const Determinant& state(Index j) const { return states_.at(j); }
  const std::vector<Determinant>& states() const noexcept { return states_; }

  /// Position of d, or npos when d is not in the sector.
  Index index_of(const Determinant& d) const;
  static constexpr Index npos = static_cast<Index>(-1);

 private:
  // index = offset of the up mask + rank of the down mask within its momentum
  // class. Both carry the class id so out-of-sector pairs are rejected.
  struct Slot {
    Index value = npos;
    int cls = -1;
  };
  const Slot* find(const std::vector<Slot>& dense, const std::unordered_map<std::uint64_t, Slot>& sparse,
                   std::uint64_t mask) const;

  Momentum sector_;
  std::vector<Determinant> states_;
  std::vector<Slot> up_dense_, down_dense_;  ///< indexed by mask when orbitals <= 20
  std::unordered_map<std::uint64_t, Slot> up_sparse_, down_sparse_;
};

/// One nonzero of a Hamiltonian column.
struct Entry {
  Index row;
  double value;
};

/// Column j of H: the diagonal first, then every off-diagonal connection
/// with amplitude +-U/N_orb.
std::vector<Entry> hamiltonian_column(const LatticeSpec& spec, const MomentumBasis& basis,
                                      Index j);

/// Fixed-capacity least-recently-used column store. Hits copy into the
/// caller's buffer so eviction never invalidates a returned view.
class ColumnCache {
 public:
  explicit ColumnCache(std::size_t capacity) : capacity_(capacity) {}

  bool lookup(Index j, ColumnBuffer& out) const;
  void insert(Index j, const ColumnBuffer& column) const;
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const;

 private:
  struct Slot {
    Index j;
    std::vector<Index> rows;
    std::vector<double> values;
  };
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::list<Slot> lru_;
  mutable std::unordered_map<Index, std::list<Slot>::iterator> where_;
};

/// H generated on the fly, optionally behind a ColumnCache. Cache hits still
/// count as column accesses.
class HubbardOracle final : public ColumnOracle {
 public:
  HubbardOracle(LatticeSpec spec, std::size_t cache_columns = 0,
                std::size_t max_dim = MomentumBasis::kDefaultMaxDim);
  HubbardOracle(LatticeSpec spec, Momentum sector, std::size_t cache_columns = 0,
                std::size_t max_dim = MomentumBasis::kDefaultMaxDim);

  Index dim() const noexcept override { return basis_.size(); }
  double diag(Index j) const override;

  const LatticeSpec& spec() const noexcept { return spec_; }
  const MomentumBasis& basis() const noexcept { return basis_; }
  Index hf_index() const noexcept { return hf_index_; }

 protected:
  ColumnView fetch_column(Index j, ColumnBuffer& buf) const override;

 private:
  LatticeSpec spec_;
  MomentumBasis basis_;
  std::vector<double> eps_;
  std::vector<int> shifts_;
  std::vector<double> diagonal_;
  Index hf_index_;
  std::unique_ptr<ColumnCache> cache_;
};

struct ColumnStats {
  std::size_t nnz_min = 0;
  std::size_t nnz_median = 0;
  std::size_t nnz_max = 0;
  double diag_min = 0.0;
  double diag_max = 0.0;
  bool offdiag_all_pm_u_over_n = true;
};

/// One uncounted pass over every column of H (nnz includes the diagonal).
ColumnStats column_stats(const HubbardOracle& h);

struct GroundState {
  double energy = 0.0;          ///< smallest eigenvalue of H
  double second_energy = 0.0;   ///< second smallest eigenvalue of H
  std::vector<double> vector;   ///< unit ground-state vector
};

/// Ground state of H from Lanczos on 100 I - H.
GroundState ground_state_reference(const HubbardOracle& h, double shift = 100.0);

}  // namespace cdlevp::hubbard
