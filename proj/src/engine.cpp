#include "cdlevp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cdlevp/reference.hpp"

namespace cdlevp {
namespace {

void refresh_if_due(SolverState& st) {
  if (st.since_refresh < st.dim()) return;
  st.nu = std::inner_product(st.x.begin(), st.x.end(), st.x.begin(), 0.0);
  st.s = std::inner_product(st.x.begin(), st.x.end(), st.z.begin(), 0.0);
  st.since_refresh = 0;
}

double score(const SolverState& st, Index j) { return st.nu * st.x[j] - st.z[j]; }

}  // namespace

void StrategyConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("strategy: " + m); };
  if (k == 0) fail("batch size k must be at least 1");
  if (!(t >= 0.0) || !std::isfinite(t)) fail("sampling power t must be finite and >= 0");
  if (update == UpdateRule::FixedGrad && !(gamma > 0.0)) fail("FixedGrad needs gamma > 0");
  if (pick == PickRule::GreedyLS && update != UpdateRule::CoordLS)
    fail("GreedyLS pick requires the CoordLS update");
  if (update == UpdateRule::VecLS && pick != PickRule::Uniform && pick != PickRule::GradPower &&
      pick != PickRule::All)
    fail("VecLS requires a sampled or full coordinate set");
  if ((pick == PickRule::GaussSouthwell || pick == PickRule::GreedyLS) && k > 1 && !averaged &&
      !allow_naive_batch)
    fail("greedy picks with k > 1 need averaged batching");
}

SolverState init_state(const ColumnOracle& a, std::span<const double> x0, std::uint64_t seed) {
  const Index n = a.dim();
  if (x0.size() != n)
    throw std::invalid_argument("init_state: x0 has dimension " + std::to_string(x0.size()) +
                                ", operator has " + std::to_string(n));
  SolverState st;
  st.x.assign(x0.begin(), x0.end());
  st.z.assign(n, 0.0);
  st.rng.seed(seed);
  for (Index j = 0; j < n; ++j) {
    const double xj = x0[j];
    if (xj == 0.0) continue;
    a.column(j, st.buf).for_each([&](Index i, double v) { st.z[i] += v * xj; });
    ++st.init_accesses;
  }
  st.nu = std::inner_product(st.x.begin(), st.x.end(), st.x.begin(), 0.0);
  st.s = std::inner_product(st.x.begin(), st.x.end(), st.z.begin(), 0.0);
  return st;
}

void apply_coordinate_delta(const ColumnOracle& a, SolverState& st, Index j, double alpha) {
  const ColumnView col = a.column(j, st.buf);
  ++st.col_accesses;
  ++st.since_refresh;
  if (alpha != 0.0) {
    double a_jj = 0.0;
    const double xj = st.x[j], zj = st.z[j];
    col.for_each([&](Index i, double v) {
      st.z[i] += alpha * v;
      if (i == j) a_jj = v;
    });
    st.x[j] = xj + alpha;
    st.nu += alpha * (2.0 * xj + alpha);
    st.s += alpha * (2.0 * zj + alpha * a_jj);
  }
  refresh_if_due(st);
}

Drift revalidate(const ColumnOracle& a, SolverState& st) {
  std::vector<double> ax(st.dim());
  apply_uncounted(a, st.x, ax);
  Drift d;
  for (Index i = 0; i < st.dim(); ++i) d.z = std::max(d.z, std::abs(st.z[i] - ax[i]));
  st.z = std::move(ax);
  const double nu = std::inner_product(st.x.begin(), st.x.end(), st.x.begin(), 0.0);
  const double s = std::inner_product(st.x.begin(), st.x.end(), st.z.begin(), 0.0);
  d.nu = std::abs(st.nu - nu);
  d.s = std::abs(st.s - s);
  st.nu = nu;
  st.s = s;
  st.since_refresh = 0;
  return d;
}

void gradient_scores(const SolverState& st, std::vector<double>& c) {
  c.resize(st.dim());
  for (Index j = 0; j < st.dim(); ++j) c[j] = score(st, j);
}

std::vector<double> gradient_scores(const SolverState& st) {
  std::vector<double> c;
  gradient_scores(st, c);
  return c;
}

Index pick_cyclic(const SolverState& st) { return static_cast<Index>(st.ell % st.dim()); }

std::optional<std::vector<Index>> pick_grad_power(std::span<const double> c, double t, std::size_t k,
                                                  bool with_replacement, std::mt19937_64& rng) {
  const Index n = c.size();
  if (n == 0 || k == 0) return std::nullopt;
  double cmax = 0.0;
  if (t != 0.0)
    for (double v : c) cmax = std::max(cmax, std::abs(v));
  if (t != 0.0 && cmax == 0.0) return std::nullopt;
  // Normalizing by the largest score keeps |c|^t representable for big t.
  const double inv = t == 0.0 ? 0.0 : 1.0 / cmax;
  auto weight = [&](Index j) {
    const double r = std::abs(c[j]) * inv;
    if (t == 1.0) return r;
    if (t == 2.0) return r * r;
    return t == 0.0 ? 1.0 : std::pow(r, t);
  };

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Index> out;
  out.reserve(k);
  if (t == 0.0 && (with_replacement || 2 * k <= n)) {
    std::uniform_int_distribution<Index> pick(0, n - 1);
    while (out.size() < k) {
      const Index j = pick(rng);
      if (with_replacement || std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
    }
    return out;
  }
  if (with_replacement) {
    double total = 0.0;
    for (Index j = 0; j < n; ++j) total += weight(j);
    std::vector<double> u(k);
    for (double& e : u) e = unif(rng) * total;
    std::sort(u.begin(), u.end());
    double cum = 0.0;
    Index last_positive = 0;
    std::size_t next = 0;
    for (Index j = 0; j < n && next < k; ++j) {
      const double w = weight(j);
      if (w <= 0.0) continue;
      last_positive = j;
      cum += w;
      while (next < k && u[next] < cum) {
        out.push_back(j);
        ++next;
      }
    }
    // Round-off can leave the top variates past the final partial sum.
    while (out.size() < k) out.push_back(last_positive);
    return out;
  }

  // Exponential keys log(U)/w: the k largest are a sequential draw without
  // replacement.
  std::vector<std::pair<double, Index>> keys;
  keys.reserve(n);
  for (Index j = 0; j < n; ++j) {
    const double w = weight(j);
    if (w <= 0.0) continue;
    double u = unif(rng);
    while (u == 0.0) u = unif(rng);
    keys.emplace_back(std::log(u) / w, j);
  }
  const std::size_t m = std::min(k, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m), keys.end(),
                    [](const auto& l, const auto& r) { return l.first > r.first; });
  for (std::size_t i = 0; i < m; ++i) out.push_back(keys[i].second);
  return out;
}

Index pick_gauss_southwell(std::span<const double> c) {
  Index best = 0;
  double val = -1.0;
  for (Index j = 0; j < c.size(); ++j)
    if (std::abs(c[j]) > val) {
      val = std::abs(c[j]);
      best = j;
    }
  return best;
}

std::vector<Index> top_k_gauss_southwell(std::span<const double> c, std::size_t k) {
  std::vector<Index> idx(c.size());
  std::iota(idx.begin(), idx.end(), Index{0});
  const std::size_t m = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(),
                    [&](Index l, Index r) {
                      const double al = std::abs(c[l]), ar = std::abs(c[r]);
                      return al != ar ? al > ar : l < r;
                    });
  idx.resize(m);
  return idx;
}

CubicCoeffs coord_cubic(const SolverState& st, Index j, double a_jj) {
  const double xj = st.x[j];
  return {3.0 * xj, st.nu + 2.0 * xj * xj - a_jj, st.nu * xj - st.z[j]};
}

double coord_ls_value(const SolverState& st, Index j, double a_jj) {
  const double xj = st.x[j];
  return solve_cubic_min({0.0, st.nu - xj * xj - a_jj, a_jj * xj - st.z[j]});
}

double coord_ls_delta(const SolverState& st, Index j, double a_jj) {
  return coord_ls_value(st, j, a_jj) - st.x[j];
}

namespace {

GreedyChoice greedy_eval(const ColumnOracle& a, const SolverState& st, Index j) {
  const double a_jj = a.diag(j);
  const double alpha = coord_ls_delta(st, j, a_jj);
  return {j, alpha, delta_f(alpha, coord_cubic(st, j, a_jj))};
}

}  // namespace

GreedyChoice pick_greedy_ls(const ColumnOracle& a, const SolverState& st) {
  GreedyChoice best{0, 0.0, 0.0};
  bool first = true;
  // Differences below the rounding level of f count as ties.
  const double tie = 1e-15 * (1.0 + st.nu * st.nu);
  for (Index j = 0; j < st.dim(); ++j) {
    const GreedyChoice g = greedy_eval(a, st, j);
    if (first || g.delta_f < best.delta_f - tie) {
      best = g;
      first = false;
    }
  }
  return best;
}

std::vector<GreedyChoice> top_k_greedy_ls(const ColumnOracle& a, const SolverState& st,
                                          std::size_t k) {
  std::vector<GreedyChoice> all(st.dim());
  for (Index j = 0; j < st.dim(); ++j) all[j] = greedy_eval(a, st, j);
  const std::size_t m = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(),
                    [](const GreedyChoice& l, const GreedyChoice& r) {
                      return l.delta_f != r.delta_f ? l.delta_f < r.delta_f : l.j < r.j;
                    });
  all.resize(m);
  return all;
}

double vec_ls_alpha(const SolverState& st, std::span<const Index> omega, std::span<const double> v,
                    std::span<const double> av) {
  double m = 0.0, w = 0.0, vz = 0.0, vav = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const Index j = omega[i];
    m += v[i] * v[i];
    w += v[i] * st.x[j];
    vz += v[i] * st.z[j];
    vav += v[i] * av[j];
  }
  if (m == 0.0) return 0.0;
  // 4m^2 a^3 + 12wm a^2 + 4(nu m + 2w^2 - v'Av) a + 4(nu w - v'z), made monic.
  const CubicCoeffs q{3.0 * w / m, (st.nu * m + 2.0 * w * w - vav) / (m * m),
                      (st.nu * w - vz) / (m * m)};
  return solve_cubic_min(q);
}

namespace {

StepReport vec_ls_step(const ColumnOracle& a, SolverState& st, std::vector<Index> omega) {
  const Index n = st.dim();
  StepReport rep;
  std::vector<double> v(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) v[i] = 4.0 * score(st, omega[i]);
  st.av.assign(n, 0.0);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double vi = v[i];
    a.column(omega[i], st.buf).for_each([&](Index r, double val) { st.av[r] += vi * val; });
  }
  const double alpha = vec_ls_alpha(st, omega, v, st.av);
  double m = 0.0, w = 0.0, vz = 0.0, vav = 0.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const Index j = omega[i];
    m += v[i] * v[i];
    w += v[i] * st.x[j];
    vz += v[i] * st.z[j];
    vav += v[i] * st.av[j];
  }
  for (std::size_t i = 0; i < omega.size(); ++i) st.x[omega[i]] += alpha * v[i];
  if (alpha != 0.0)
    for (Index r = 0; r < n; ++r) st.z[r] += alpha * st.av[r];
  st.nu += alpha * (2.0 * w + alpha * m);
  st.s += alpha * (2.0 * vz + alpha * vav);
  st.col_accesses += omega.size();
  st.since_refresh += omega.size();
  refresh_if_due(st);

  rep.col_accesses = omega.size();
  rep.deltas.resize(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) rep.deltas[i] = alpha * v[i];
  rep.indices = std::move(omega);
  return rep;
}

}  // namespace

StepReport step(const ColumnOracle& a, SolverState& st, const StrategyConfig& cfg) {
  const Index n = st.dim();
  const std::size_t k = cfg.k;
  StepReport rep;

  switch (cfg.pick) {
    case PickRule::Cyclic:
      for (std::size_t i = 0; i < k; ++i)
        rep.indices.push_back(static_cast<Index>((st.ell * k + i) % n));
      break;
    case PickRule::Uniform:
    case PickRule::GradPower: {
      const double t = cfg.pick == PickRule::Uniform ? 0.0 : cfg.t;
      const bool replace = cfg.with_replacement && cfg.update != UpdateRule::VecLS;
      if (!replace && k > n) throw std::invalid_argument("step: k exceeds n without replacement");
      if (t != 0.0) gradient_scores(st, st.scores);
      else st.scores.resize(n);
      auto picked = pick_grad_power(st.scores, t, k, replace, st.rng);
      if (!picked) throw StationaryPoint();
      rep.indices = std::move(*picked);
      break;
    }
    case PickRule::GaussSouthwell: {
      gradient_scores(st, st.scores);
      if (k == 1) rep.indices.push_back(pick_gauss_southwell(st.scores));
      else rep.indices = top_k_gauss_southwell(st.scores, k);
      if (st.scores[rep.indices.front()] == 0.0) throw StationaryPoint();
      break;
    }
    case PickRule::GreedyLS: {
      std::vector<GreedyChoice> picks;
      if (k == 1) picks.push_back(pick_greedy_ls(a, st));
      else picks = top_k_greedy_ls(a, st, k);
      for (const auto& g : picks) {
        rep.indices.push_back(g.j);
        rep.deltas.push_back(g.alpha);
      }
      break;
    }
    case PickRule::All:
      rep.indices.resize(n);
      std::iota(rep.indices.begin(), rep.indices.end(), Index{0});
      break;
  }

  if (cfg.update == UpdateRule::VecLS) {
    rep = vec_ls_step(a, st, std::move(rep.indices));
    ++st.ell;
    return rep;
  }

  if (rep.deltas.empty()) {
    rep.deltas.resize(rep.indices.size());
    for (std::size_t i = 0; i < rep.indices.size(); ++i) {
      const Index j = rep.indices[i];
      rep.deltas[i] = cfg.update == UpdateRule::FixedGrad
                          ? -cfg.gamma * 4.0 * score(st, j)
                          : coord_ls_delta(st, j, a.diag(j));
    }
  }
  if (cfg.averaged && rep.indices.size() > 1)
    for (double& d : rep.deltas) d /= static_cast<double>(rep.indices.size());
  for (std::size_t i = 0; i < rep.indices.size(); ++i)
    apply_coordinate_delta(a, st, rep.indices[i], rep.deltas[i]);
  rep.col_accesses = rep.indices.size();
  ++st.ell;
  return rep;
}

void power_method_step(const ColumnOracle& a, SolverState& st) {
  const Index n = st.dim();
  const double norm = std::sqrt(std::inner_product(st.z.begin(), st.z.end(), st.z.begin(), 0.0));
  if (norm == 0.0) throw std::runtime_error("power method: A x vanished");
  std::vector<double> u(n), w(n, 0.0);
  for (Index i = 0; i < n; ++i) u[i] = st.z[i] / norm;
  for (Index j = 0; j < n; ++j) {
    const double uj = u[j];
    const ColumnView col = a.column(j, st.buf);
    if (uj != 0.0) col.for_each([&](Index i, double v) { w[i] += v * uj; });
  }
  st.col_accesses += n;
  const double rho = std::inner_product(u.begin(), u.end(), w.begin(), 0.0);
  const double scale = rho > 0.0 ? std::sqrt(rho) : 1.0;
  for (Index i = 0; i < n; ++i) {
    st.x[i] = scale * u[i];
    st.z[i] = scale * w[i];
  }
  st.nu = scale * scale;
  st.s = st.nu * rho;
  st.since_refresh = 0;
  ++st.ell;
}

double stepsize_bound(const ColumnOracle& a) {
  const double r_sq = column_norm_max(a);
  return 1.0 / (4.0 * (static_cast<double>(a.dim()) + 4.0) * r_sq);
}

}  // namespace cdlevp
