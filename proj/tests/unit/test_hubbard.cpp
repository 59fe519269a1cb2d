#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "cdlevp/engine.hpp"
#include "cdlevp/hubbard.hpp"
#include "doctest.h"

using namespace cdlevp;
using namespace cdlevp::hubbard;
using doctest::Approx;

namespace {

LatticeSpec lattice(int l1, int l2, int nu, int nd, double u = 4.0) {
  LatticeSpec s;
  s.l1 = l1;
  s.l2 = l2;
  s.n_up = nu;
  s.n_down = nd;
  s.u = u;
  return s;
}

std::uint64_t bit(int r) { return std::uint64_t{1} << r; }

// Straight from the lattice definition, independent of the library.
double eps_direct(int l1, int l2, int r) {
  const double k1 = 2 * std::numbers::pi * (r / l2) / l1;
  const double k2 = 2 * std::numbers::pi * (r % l2) / l2;
  return -2.0 * (std::cos(k1) + std::cos(k2));
}

std::pair<int, int> momentum_direct(int l1, int l2, std::uint64_t mask) {
  int a = 0, b = 0;
  for (int r = 0; r < l1 * l2; ++r)
    if (mask & bit(r)) {
      a += r / l2;
      b += r % l2;
    }
  return {a % l1, b % l2};
}

std::vector<std::uint64_t> masks_with(int n_orb, int count) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n_orb); ++m)
    if (std::popcount(m) == count) out.push_back(m);
  return out;
}

Eigen::MatrixXd dense_hamiltonian(const HubbardOracle& h) {
  const Index n = h.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  ColumnBuffer buf;
  for (Index j = 0; j < n; ++j)
    h.peek_column(j, buf).for_each([&](Index i, double v) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v;
    });
  return m;
}

}  // namespace

TEST_CASE("dispersion") {
  const LatticeSpec s = lattice(4, 4, 1, 1);
  CHECK(dispersion(s, 0) == Approx(-4.0));
  CHECK(dispersion(s, 2 * 4 + 2) == Approx(4.0));
  CHECK(dispersion(s, 1 * 4 + 0) == Approx(-2.0).scale(1.0));
  for (int r = 0; r < 16; ++r) CHECK(dispersion(s, r) == Approx(eps_direct(4, 4, r)).scale(1.0));
  CHECK_THROWS_AS(dispersion(s, 16), std::out_of_range);
  CHECK_THROWS_AS(dispersion(s, -1), std::out_of_range);
}

TEST_CASE("lattice validation") {
  CHECK_THROWS_AS(lattice(4, 4, 17, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(lattice(0, 4, 1, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(lattice(9, 8, 1, 1).validate(), std::invalid_argument);
  CHECK_NOTHROW(lattice(4, 4, 16, 0).validate());
}

TEST_CASE("Hartree-Fock determinant") {
  SUBCASE("one electron per spin sits at k = 0") {
    const Determinant d = hf_determinant(lattice(4, 4, 1, 1));
    CHECK(d.up == 1);
    CHECK(d.down == 1);
  }
  SUBCASE("3+3 fills k = 0 and two degenerate orbitals") {
    const LatticeSpec s = lattice(4, 4, 3, 3);
    const Determinant d = hf_determinant(s);
    CHECK(std::popcount(d.up) == 3);
    CHECK(std::popcount(d.down) == 3);
    CHECK((d.up & 1) == 1);
    for (std::uint64_t m : {d.up, d.down}) {
      double e = 0.0;
      for (int r = 0; r < 16; ++r)
        if (m & bit(r)) e += eps_direct(4, 4, r);
      CHECK(e == Approx(-8.0));
    }
    // Folded wave vectors (-1, 0) and (0, -1): orbitals (3,0) and (0,3).
    CHECK(d.up == (bit(0) | bit(12) | bit(3)));
    CHECK(d.down == d.up);
    CHECK(total_momentum(s, d) == Momentum{2, 2});
  }
  SUBCASE("5+5 closes the shell") {
    const LatticeSpec s = lattice(4, 4, 5, 5);
    const Determinant d = hf_determinant(s);
    const std::uint64_t shell = bit(0) | bit(1) | bit(3) | bit(4) | bit(12);
    CHECK(d.up == shell);
    CHECK(d.down == shell);
    double kinetic = 0.0;
    for (int r = 0; r < 16; ++r)
      if (d.up & bit(r)) kinetic += dispersion(s, r);
    CHECK(kinetic == Approx(-12.0));
  }
}

TEST_CASE("sector enumeration") {
  SUBCASE("2x1, 1+1") {
    const MomentumBasis b(lattice(2, 1, 1, 1));
    CHECK(b.size() == 2);
  }
  SUBCASE("4x4, 3+3 has 19600 states matching a brute-force filter") {
    const LatticeSpec s = lattice(4, 4, 3, 3);
    const MomentumBasis b(s);
    REQUIRE(b.size() == 19600);
    const auto sector = momentum_direct(4, 4, hf_determinant(s).up);
    const auto target = std::pair{(2 * sector.first) % 4, (2 * sector.second) % 4};
    std::size_t count = 0;
    const auto masks = masks_with(16, 3);
    for (std::uint64_t up : masks)
      for (std::uint64_t dn : masks) {
        const auto pu = momentum_direct(4, 4, up), pd = momentum_direct(4, 4, dn);
        if ((pu.first + pd.first) % 4 == target.first && (pu.second + pd.second) % 4 == target.second)
          ++count;
      }
    CHECK(count == 19600);
    for (Index j = 0; j < b.size(); ++j) {
      const Determinant& d = b.state(j);
      CHECK(std::popcount(d.up) == 3);
      CHECK(std::popcount(d.down) == 3);
      CHECK(total_momentum(s, d) == b.sector());
      CHECK(b.index_of(d) == j);
      if (j > 0) CHECK(b.state(j - 1) < d);
    }
    // Orbitals (0,0), (0,1), (0,2) per spin carry total momentum (0, 2).
    CHECK(b.index_of(Determinant{7, 7}) == MomentumBasis::npos);
  }
  SUBCASE("4x4, 5+5 has 1192464 states") {
    const MomentumBasis b(lattice(4, 4, 5, 5));
    CHECK(b.size() == 1192464);
  }
  SUBCASE("size guard") {
    CHECK_THROWS_AS(MomentumBasis(lattice(4, 4, 3, 3), 1000), std::length_error);
  }
  SUBCASE("explicit sectors partition the full space") {
    const LatticeSpec s = lattice(3, 3, 2, 1);
    std::size_t total = 0;
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) total += MomentumBasis(s, Momentum{a, c}).size();
    CHECK(total == 36 * 9);
  }
}

TEST_CASE("Hamiltonian columns, 4x4 3+3") {
  const LatticeSpec s = lattice(4, 4, 3, 3);
  const HubbardOracle h(s);
  REQUIRE(h.dim() == 19600);
  const double amp = s.u / 16.0;

  SUBCASE("nnz statistics and off-diagonal values") {
    const ColumnStats st = column_stats(h);
    CHECK(st.nnz_min == 100);
    CHECK(st.nnz_median == 102);
    CHECK(st.nnz_max == 112);
    CHECK(st.offdiag_all_pm_u_over_n);
    CHECK(h.access_count() == 0);
  }
  SUBCASE("diagonal formula") {
    for (Index j = 0; j < h.dim(); j += 97) {
      const Determinant& d = h.basis().state(j);
      double e = 0.0;
      for (int r = 0; r < 16; ++r) {
        if (d.up & bit(r)) e += eps_direct(4, 4, r);
        if (d.down & bit(r)) e += eps_direct(4, 4, r);
      }
      CHECK(h.diag(j) == Approx(e + amp * 9.0).scale(1.0));
      const auto col = hamiltonian_column(s, h.basis(), j);
      CHECK(col.front().row == j);
      CHECK(col.front().value == Approx(h.diag(j)));
    }
  }
  SUBCASE("conservation, uniqueness and values of every connection") {
    for (Index j = 0; j < h.dim(); j += 13) {
      const auto col = hamiltonian_column(s, h.basis(), j);
      std::set<Index> rows;
      for (std::size_t p = 0; p < col.size(); ++p) {
        CHECK(rows.insert(col[p].row).second);
        CHECK(total_momentum(s, h.basis().state(col[p].row)) == h.basis().sector());
        if (p > 0) CHECK(std::abs(std::abs(col[p].value) - amp) < 1e-15);
      }
    }
  }
  SUBCASE("Hermiticity on 1000 sampled pairs, including sign") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<Index> pick(0, h.dim() - 1);
    ColumnBuffer bj, bi;
    int connected = 0;
    for (int t = 0; t < 1000; ++t) {
      const Index j = pick(rng);
      const ColumnView cj = h.peek_column(j, bj);
      // Half the pairs are drawn from actual connections so signs get tested.
      const Index i = (t % 2 == 0 && cj.nnz() > 1) ? cj.rows[1 + rng() % (cj.nnz() - 1)] : pick(rng);
      const double hij = cj.at(i);
      const double hji = h.peek_column(i, bi).at(j);
      CHECK(std::abs(hij - hji) <= 1e-14);
      connected += hij != 0.0 && i != j;
    }
    CHECK(connected >= 500);
  }
  SUBCASE("forward then backward excitation restores the source with a positive sign") {
    ColumnBuffer bj, bi;
    for (Index j = 0; j < h.dim(); j += 199) {
      const ColumnView cj = h.peek_column(j, bj);
      std::vector<std::pair<Index, double>> targets;
      cj.for_each([&](Index i, double v) {
        if (i != j) targets.emplace_back(i, v);
      });
      for (const auto& [i, v] : targets) {
        const double back = h.peek_column(i, bi).at(j);
        CHECK(v * back == Approx(amp * amp).epsilon(1e-14));
      }
    }
  }
  SUBCASE("range errors") {
    CHECK_THROWS_AS(h.diag(h.dim()), std::out_of_range);
    ColumnBuffer buf;
    CHECK_THROWS_AS(h.column(h.dim(), buf), std::out_of_range);
  }
}

TEST_CASE("diagonal range for 4x4 5+5") {
  const HubbardOracle h(lattice(4, 4, 5, 5));
  REQUIRE(h.dim() == 1192464);
  double lo = 1e300, hi = -1e300;
  std::size_t above = 0;
  for (Index j = 0; j < h.dim(); ++j) {
    lo = std::min(lo, h.diag(j));
    hi = std::max(hi, h.diag(j));
    above += h.diag(j) >= 30.0;
  }
  // Kinetic energy spans [-24, 24] with the shift 25 U/16 on top. Only the
  // fully inverted shell, which shares the HF momentum, leaves (-20, 30).
  CHECK(lo == Approx(-24.0 + 6.25));
  CHECK(hi == Approx(24.0 + 6.25));
  CHECK(lo > -20.0);
  CHECK(above == 1);
  // HF diagonal: kinetic -24 plus 25 U/16.
  CHECK(h.diag(h.hf_index()) == Approx(-24.0 + 25.0 * 0.25));
}

TEST_CASE("cached oracle returns the same columns and still counts accesses") {
  const LatticeSpec s = lattice(3, 3, 2, 2);
  const HubbardOracle plain(s);
  const HubbardOracle cached(s, 16);
  ColumnBuffer b1, b2;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<Index> pick(0, plain.dim() - 1);
  for (int t = 0; t < 500; ++t) {
    const Index j = pick(rng) % 40;
    const ColumnView c1 = plain.column(j, b1);
    const ColumnView c2 = cached.column(j, b2);
    REQUIRE(c1.nnz() == c2.nnz());
    for (std::size_t p = 0; p < c1.nnz(); ++p) {
      CHECK(c1.rows[p] == c2.rows[p]);
      CHECK(c1.values[p] == c2.values[p]);
    }
  }
  CHECK(cached.access_count() == 500);
  CHECK(plain.access_count() == 500);
}

TEST_CASE("Frobenius pass matches the dense spectrum on small sectors") {
  for (const LatticeSpec& s : {lattice(3, 3, 2, 2), lattice(4, 4, 2, 1)}) {
    auto h = std::make_shared<HubbardOracle>(s);
    const auto a = shift_scale(h, -1.0, 100.0);
    Eigen::MatrixXd m = dense_hamiltonian(*h);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    m = 100.0 * Eigen::MatrixXd::Identity(m.rows(), m.cols()) - m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    CHECK(frobenius_norm_sq(*a) == Approx(es.eigenvalues().squaredNorm()).epsilon(1e-6));
  }
}

TEST_CASE("Frobenius pass matches the closed form for 4x4 3+3") {
  auto h = std::make_shared<HubbardOracle>(lattice(4, 4, 3, 3));
  const auto a = shift_scale(h, -1.0, 100.0);
  double diag_sq = 0.0;
  std::size_t offdiag = 0;
  ColumnBuffer buf;
  for (Index j = 0; j < h->dim(); ++j) {
    const double d = 100.0 - h->diag(j);
    diag_sq += d * d;
    offdiag += h->peek_column(j, buf).nnz() - 1;
  }
  CHECK(frobenius_norm_sq(*a) == Approx(diag_sq + offdiag * 0.0625).epsilon(1e-12));
}

TEST_CASE("non-interacting ground state equals the best orbital filling in the sector") {
  for (const LatticeSpec& s : {lattice(3, 3, 2, 1, 0.0), lattice(4, 4, 3, 3, 0.0)}) {
    const HubbardOracle h(s);
    const Momentum sec = h.basis().sector();
    double best = 1e300;
    const auto up = masks_with(s.n_orb(), s.n_up);
    const auto dn = masks_with(s.n_orb(), s.n_down);
    for (std::uint64_t mu : up)
      for (std::uint64_t md : dn) {
        const auto pu = momentum_direct(s.l1, s.l2, mu), pd = momentum_direct(s.l1, s.l2, md);
        if ((pu.first + pd.first) % s.l1 != sec.k1 || (pu.second + pd.second) % s.l2 != sec.k2)
          continue;
        double e = 0.0;
        for (int r = 0; r < s.n_orb(); ++r) {
          if (mu & bit(r)) e += eps_direct(s.l1, s.l2, r);
          if (md & bit(r)) e += eps_direct(s.l1, s.l2, r);
        }
        best = std::min(best, e);
      }
    CHECK(ground_state_reference(h).energy == Approx(best).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("initial state 10 e_HF on the shifted operator") {
  auto h = std::make_shared<HubbardOracle>(lattice(4, 4, 3, 3));
  const auto a = shift_scale(h, -1.0, 100.0);
  std::vector<double> x0(h->dim(), 0.0);
  x0[h->hf_index()] = 10.0;
  const SolverState st = init_state(*a, x0);
  CHECK(st.nu == 100.0);
  CHECK(st.init_accesses == 1);
  ColumnBuffer buf;
  const ColumnView col = a->peek_column(h->hf_index(), buf);
  std::vector<double> want(h->dim(), 0.0);
  col.for_each([&](Index i, double v) { want[i] = 10.0 * v; });
  CHECK(st.z == want);
}
