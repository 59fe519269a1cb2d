#include "cdlevp/hubbard.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

#include "cdlevp/reference.hpp"

namespace cdlevp::hubbard {
namespace {

std::uint64_t bit(int r) { return std::uint64_t{1} << r; }

int popcount_below(std::uint64_t mask, int r) { return std::popcount(mask & (bit(r) - 1)); }

// Next mask with the same popcount (Gosper's hack).
std::uint64_t next_combination(std::uint64_t v) {
  const std::uint64_t t = v | (v - 1);
  return (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
}

std::uint64_t low_bits(int k) { return k >= 64 ? ~std::uint64_t{0} : bit(k) - 1; }

// Visits every n-bit mask with k bits set, in ascending order.
template <class F>
void for_each_combination(int n, int k, F&& f) {
  const std::uint64_t last = k == 0 ? 0 : low_bits(k) << (n - k);
  for (std::uint64_t v = low_bits(k);; v = next_combination(v)) {
    f(v);
    if (v == last) break;
  }
}

}  // namespace

void LatticeSpec::validate() const {
  if (l1 <= 0 || l2 <= 0) throw std::invalid_argument("LatticeSpec: lattice sides must be positive");
  if (n_orb() > 64) throw std::invalid_argument("LatticeSpec: at most 64 orbitals are supported");
  if (n_up < 0 || n_down < 0 || n_up > n_orb() || n_down > n_orb())
    throw std::invalid_argument("LatticeSpec: electron counts must lie in [0, L1*L2]");
  if (!std::isfinite(t_hop) || !std::isfinite(u))
    throw std::invalid_argument("LatticeSpec: t and U must be finite");
}

double dispersion(const LatticeSpec& spec, int orbital) {
  if (orbital < 0 || orbital >= spec.n_orb())
    throw std::out_of_range("dispersion: orbital index " + std::to_string(orbital) +
                            " out of range");
  const double k1 = 2.0 * std::numbers::pi * (orbital / spec.l2) / spec.l1;
  const double k2 = 2.0 * std::numbers::pi * (orbital % spec.l2) / spec.l2;
  return -2.0 * (std::cos(k1) + std::cos(k2));
}

Momentum mask_momentum(const LatticeSpec& spec, std::uint64_t mask) {
  Momentum m;
  while (mask) {
    const int r = std::countr_zero(mask);
    mask &= mask - 1;
    m.k1 += r / spec.l2;
    m.k2 += r % spec.l2;
  }
  m.k1 %= spec.l1;
  m.k2 %= spec.l2;
  return m;
}

Momentum total_momentum(const LatticeSpec& spec, const Determinant& d) {
  const Momentum a = mask_momentum(spec, d.up);
  const Momentum b = mask_momentum(spec, d.down);
  return {(a.k1 + b.k1) % spec.l1, (a.k2 + b.k2) % spec.l2};
}

Determinant hf_determinant(const LatticeSpec& spec) {
  spec.validate();
  std::vector<int> order(spec.n_orb());
  for (int r = 0; r < spec.n_orb(); ++r) order[r] = r;
  // Dispersion values are quantized so that cos() round-off cannot split a
  // degenerate shell.
  // Ties go by the wave vector folded into (-L/2, L/2], lexicographically.
  // Partially filled shells then avoid pairing k with -k.
  auto fold = [](int r, int l) { return 2 * r > l ? r - l : r; };
  auto key = [&](int r) {
    return std::tuple(std::llround(dispersion(spec, r) * 1e9), fold(r / spec.l2, spec.l1),
                      fold(r % spec.l2, spec.l2));
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
  Determinant d;
  for (int i = 0; i < spec.n_up; ++i) d.up |= bit(order[i]);
  for (int i = 0; i < spec.n_down; ++i) d.down |= bit(order[i]);
  return d;
}

MomentumBasis::MomentumBasis(const LatticeSpec& spec, std::size_t max_dim)
    : MomentumBasis(spec, total_momentum(spec, hf_determinant(spec)), max_dim) {}

MomentumBasis::MomentumBasis(const LatticeSpec& spec, Momentum sector, std::size_t max_dim)
    : sector_{((sector.k1 % spec.l1) + spec.l1) % spec.l1, ((sector.k2 % spec.l2) + spec.l2) % spec.l2} {
  spec.validate();
  const int n_orb = spec.n_orb();
  const int n_sectors = spec.l1 * spec.l2;
  auto sector_id = [&](Momentum m) { return m.k1 * spec.l2 + m.k2; };

  std::vector<std::uint64_t> ups;
  for_each_combination(n_orb, spec.n_up, [&](std::uint64_t m) { ups.push_back(m); });
  std::vector<std::vector<std::uint64_t>> downs_by_momentum(n_sectors);
  for_each_combination(n_orb, spec.n_down, [&](std::uint64_t m) {
    downs_by_momentum[sector_id(mask_momentum(spec, m))].push_back(m);
  });

  auto partner = [&](std::uint64_t up) {
    const Momentum p = mask_momentum(spec, up);
    const Momentum need{((sector_.k1 - p.k1) % spec.l1 + spec.l1) % spec.l1,
                        ((sector_.k2 - p.k2) % spec.l2 + spec.l2) % spec.l2};
    return sector_id(need);
  };

  std::size_t total = 0;
  for (std::uint64_t up : ups) total += downs_by_momentum[partner(up)].size();
  if (total > max_dim)
    throw std::length_error("MomentumBasis: sector dimension " + std::to_string(total) +
                            " exceeds cap " + std::to_string(max_dim));

  const bool dense = n_orb <= 20;
  if (dense) {
    up_dense_.assign(std::size_t{1} << n_orb, Slot{});
    down_dense_.assign(std::size_t{1} << n_orb, Slot{});
  }
  auto put = [&](std::vector<Slot>& d, std::unordered_map<std::uint64_t, Slot>& sp, std::uint64_t mask,
                 Slot slot) {
    if (dense) d[mask] = slot;
    else sp.emplace(mask, slot);
  };
  for (int c = 0; c < n_sectors; ++c)
    for (std::size_t r = 0; r < downs_by_momentum[c].size(); ++r)
      put(down_dense_, down_sparse_, downs_by_momentum[c][r], {static_cast<Index>(r), c});

  // ups and each down list are ascending, so states come out sorted.
  states_.reserve(total);
  for (std::uint64_t up : ups) {
    const int c = partner(up);
    if (downs_by_momentum[c].empty()) continue;
    put(up_dense_, up_sparse_, up, {static_cast<Index>(states_.size()), c});
    for (std::uint64_t down : downs_by_momentum[c]) states_.push_back({up, down});
  }
}

const MomentumBasis::Slot* MomentumBasis::find(const std::vector<Slot>& dense,
                                               const std::unordered_map<std::uint64_t, Slot>& sparse,
                                               std::uint64_t mask) const {
  if (!dense.empty()) return mask < dense.size() && dense[mask].cls >= 0 ? &dense[mask] : nullptr;
  const auto it = sparse.find(mask);
  return it == sparse.end() ? nullptr : &it->second;
}

Index MomentumBasis::index_of(const Determinant& d) const {
  const Slot* u = find(up_dense_, up_sparse_, d.up);
  if (!u) return npos;
  const Slot* w = find(down_dense_, down_sparse_, d.down);
  if (!w || w->cls != u->cls) return npos;
  return u->value + w->value;
}

namespace {

double diagonal_element(const LatticeSpec& spec, const std::vector<double>& eps,
                        const Determinant& d) {
  double kinetic = 0.0;
  for (std::uint64_t m : {d.up, d.down})
    while (m) {
      kinetic += eps[std::countr_zero(m)];
      m &= m - 1;
    }
  return spec.t_hop * kinetic + spec.u / spec.n_orb() * spec.n_up * spec.n_down;
}

std::vector<double> dispersion_table(const LatticeSpec& spec) {
  std::vector<double> eps(spec.n_orb());
  for (int r = 0; r < spec.n_orb(); ++r) eps[r] = dispersion(spec, r);
  return eps;
}

// Orbital r shifted by momentum (d1, d2).
int shift_orbital(const LatticeSpec& spec, int r, int d1, int d2) {
  const int a = ((r / spec.l2 + d1) % spec.l1 + spec.l1) % spec.l1;
  const int b = ((r % spec.l2 + d2) % spec.l2 + spec.l2) % spec.l2;
  return a * spec.l2 + b;
}

// Rows r*N + q: orbital r moved by +q, then by -q in the second half.
std::vector<int> shift_table(const LatticeSpec& spec) {
  const int n = spec.n_orb();
  std::vector<int> t(2 * static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int q = 0; q < n; ++q) {
      t[r * n + q] = shift_orbital(spec, r, q / spec.l2, q % spec.l2);
      t[n * n + r * n + q] = shift_orbital(spec, r, -(q / spec.l2), -(q % spec.l2));
    }
  return t;
}

template <class Emit>
void generate_column(const LatticeSpec& spec, const MomentumBasis& basis, const std::vector<double>& eps,
                     const std::vector<int>& shifts, Index j, Emit&& emit) {
  const int n = spec.n_orb();
  const int* plus = shifts.data();
  const int* minus = shifts.data() + static_cast<std::size_t>(n) * n;
  const Determinant d = basis.state(j);
  emit(j, diagonal_element(spec, eps, d));
  const double amp = spec.u / spec.n_orb();
  if (amp == 0.0) return;
  for (std::uint64_t ups = d.up; ups; ups &= ups - 1) {
    const int p = std::countr_zero(ups);
    const std::uint64_t up_removed = d.up & ~bit(p);
    const int sign_p = popcount_below(d.up, p);
    for (std::uint64_t downs = d.down; downs; downs &= downs - 1) {
      const int k = std::countr_zero(downs);
      const std::uint64_t down_removed = d.down & ~bit(k);
      const int sign_k = popcount_below(d.down, k);
      for (int q = 1; q < n; ++q) {
        const int p_new = minus[p * n + q];
        const int k_new = plus[k * n + q];
        if ((d.up & bit(p_new)) || (d.down & bit(k_new))) continue;
        const Determinant target{up_removed | bit(p_new), down_removed | bit(k_new)};
        const Index i = basis.index_of(target);
        if (i == MomentumBasis::npos)
          throw std::logic_error("hamiltonian_column: momentum-violating connection");
        // Up-block parities and down-block parities are independent: the
        // (n_up - 1) up electrons crossed by both down operators cancel.
        const int parity = sign_p + popcount_below(up_removed, p_new) + sign_k +
                           popcount_below(down_removed, k_new);
        emit(i, (parity & 1) ? -amp : amp);
      }
    }
  }
}

}  // namespace

std::vector<Entry> hamiltonian_column(const LatticeSpec& spec, const MomentumBasis& basis,
                                      Index j) {
  if (j >= basis.size()) throw std::out_of_range("hamiltonian_column: state index out of range");
  const auto eps = dispersion_table(spec);
  const auto shifts = shift_table(spec);
  std::vector<Entry> out;
  generate_column(spec, basis, eps, shifts, j, [&](Index i, double v) { out.push_back({i, v}); });
  return out;
}

bool ColumnCache::lookup(Index j, ColumnBuffer& out) const {
  std::lock_guard lock(mu_);
  const auto it = where_.find(j);
  if (it == where_.end()) return false;
  lru_.splice(lru_.begin(), lru_, it->second);
  out.rows = it->second->rows;
  out.values = it->second->values;
  return true;
}

void ColumnCache::insert(Index j, const ColumnBuffer& column) const {
  if (capacity_ == 0) return;
  std::lock_guard lock(mu_);
  if (where_.count(j)) return;
  if (lru_.size() >= capacity_) {
    // Recycle the evicted slot's storage.
    auto last = std::prev(lru_.end());
    where_.erase(last->j);
    lru_.splice(lru_.begin(), lru_, last);
  } else {
    lru_.emplace_front();
  }
  Slot& s = lru_.front();
  s.j = j;
  s.rows = column.rows;
  s.values = column.values;
  where_[j] = lru_.begin();
}

std::size_t ColumnCache::size() const {
  std::lock_guard lock(mu_);
  return lru_.size();
}

HubbardOracle::HubbardOracle(LatticeSpec spec, std::size_t cache_columns, std::size_t max_dim)
    : HubbardOracle(spec, total_momentum(spec, hf_determinant(spec)), cache_columns, max_dim) {}

HubbardOracle::HubbardOracle(LatticeSpec spec, Momentum sector, std::size_t cache_columns,
                             std::size_t max_dim)
    : spec_(spec), basis_(spec_, sector, max_dim), eps_(dispersion_table(spec_)),
      shifts_(shift_table(spec_)) {
  diagonal_.resize(basis_.size());
  for (Index j = 0; j < basis_.size(); ++j)
    diagonal_[j] = diagonal_element(spec_, eps_, basis_.state(j));
  hf_index_ = basis_.index_of(hf_determinant(spec_));
  if (cache_columns > 0) cache_ = std::make_unique<ColumnCache>(cache_columns);
}

double HubbardOracle::diag(Index j) const {
  if (j >= diagonal_.size()) throw std::out_of_range("HubbardOracle::diag: index out of range");
  return diagonal_[j];
}

ColumnView HubbardOracle::fetch_column(Index j, ColumnBuffer& buf) const {
  if (j >= dim()) throw std::out_of_range("HubbardOracle::column: index out of range");
  if (cache_ && cache_->lookup(j, buf)) return buf.sparse_view();
  buf.rows.clear();
  buf.values.clear();
  generate_column(spec_, basis_, eps_, shifts_, j, [&](Index i, double v) {
    buf.rows.push_back(i);
    buf.values.push_back(v);
  });
  if (cache_) cache_->insert(j, buf);
  return buf.sparse_view();
}

ColumnStats column_stats(const HubbardOracle& h) {
  ColumnStats st;
  std::vector<std::size_t> nnz(h.dim());
  ColumnBuffer buf;
  const double amp = h.spec().u / h.spec().n_orb();
  st.diag_min = st.diag_max = h.diag(0);
  for (Index j = 0; j < h.dim(); ++j) {
    const ColumnView col = h.peek_column(j, buf);
    nnz[j] = col.nnz();
    col.for_each([&](Index i, double v) {
      if (i != j && std::abs(std::abs(v) - amp) > 1e-15) st.offdiag_all_pm_u_over_n = false;
    });
    st.diag_min = std::min(st.diag_min, h.diag(j));
    st.diag_max = std::max(st.diag_max, h.diag(j));
  }
  std::sort(nnz.begin(), nnz.end());
  st.nnz_min = nnz.front();
  st.nnz_max = nnz.back();
  st.nnz_median = nnz[(nnz.size() - 1) / 2];
  return st;
}

GroundState ground_state_reference(const HubbardOracle& h, double shift) {
  // Non-owning alias; the shifted view lives only for this call.
  std::shared_ptr<const ColumnOracle> base(&h, [](const ColumnOracle*) {});
  const ShiftScaleOracle shifted(base, -1.0, shift);
  const ReferenceSolution ref = reference_eigenpair(shifted);
  return {shift - ref.lambda1, shift - ref.lambda2, ref.v1};
}

}  // namespace cdlevp::hubbard
