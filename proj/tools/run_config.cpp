#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace cdlevp::cli {

namespace {

std::map<std::string, std::string> key_values(const std::string& text, const char* what) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw UsageError(std::string(what) + ": expected key=value, got '" + item + "'");
    if (!kv.emplace(item.substr(0, eq), item.substr(eq + 1)).second)
      throw UsageError(std::string(what) + ": duplicate key '" + item.substr(0, eq) + "'");
  }
  return kv;
}

template <class T>
T number(const std::string& s, const std::string& key) {
  T v{};
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw UsageError("bad value for " + key + ": '" + s + "'");
  return v;
}

template <class T>
void take(std::map<std::string, std::string>& kv, const std::string& key, T& out) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  out = number<T>(it->second, key);
  kv.erase(it);
}

void reject_rest(const std::map<std::string, std::string>& kv, const char* what) {
  if (!kv.empty()) throw UsageError(std::string(what) + ": unknown key '" + kv.begin()->first + "'");
}

}  // namespace

SyntheticSpec parse_synthetic(const std::string& text) {
  auto kv = key_values(text, "synthetic spec");
  SyntheticSpec s;
  take(kv, "n", s.n);
  take(kv, "l1", s.lambda1);
  take(kv, "lo", s.lo);
  take(kv, "hi", s.hi);
  take(kv, "seed", s.seed);
  reject_rest(kv, "synthetic spec");
  if (s.n < 2) throw UsageError("synthetic spec: n must be at least 2");
  if (!(s.lo < s.hi) || !(s.lambda1 > s.hi))
    throw UsageError("synthetic spec: need lo < hi < l1");
  return s;
}

hubbard::LatticeSpec parse_lattice(const std::string& text, std::size_t* cache) {
  auto kv = key_values(text, "hubbard spec");
  hubbard::LatticeSpec s;
  take(kv, "l1", s.l1);
  take(kv, "l2", s.l2);
  take(kv, "nup", s.n_up);
  take(kv, "ndown", s.n_down);
  take(kv, "u", s.u);
  take(kv, "t", s.t_hop);
  std::size_t c = 0;
  take(kv, "cache", c);
  if (cache) *cache = c;
  reject_rest(kv, "hubbard spec");
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("hubbard spec: ") + e.what());
  }
  return s;
}

X0Spec parse_x0(const std::string& text) {
  X0Spec x;
  if (text.rfind("file:", 0) == 0) {
    x.file = text.substr(5);
    if (x.file.empty()) throw UsageError("x0: empty file path");
    return x;
  }
  // The last 'e' separates the amplitude from the unit vector, so "1e3e2" is 1000 e_2.
  const auto pos = text.rfind('e');
  if (pos == std::string::npos) throw UsageError("x0: expected e<j>, e_HF or file:PATH, got '" + text + "'");
  std::string amp = text.substr(0, pos);
  const std::string idx = text.substr(pos + 1);
  if (!amp.empty() && amp.back() == '*') amp.pop_back();
  if (!amp.empty()) x.amplitude = number<double>(amp, "x0 amplitude");
  if (idx == "_HF" || idx == "_hf") return x;
  const auto j = number<Index>(idx, "x0 index");
  if (j == 0) throw UsageError("x0: unit vectors are numbered from 1");
  x.index = j - 1;
  return x;
}

void RunConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  int sources = 0;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "matrix" || key == "synthetic" || key == "hubbard") {
        ++sources;
        source = key == "matrix" ? SourceKind::Dense : key == "synthetic" ? SourceKind::Synthetic : SourceKind::Hubbard;
        source_arg = val.get<std::string>();
      } else if (key == "scale") scale = val.get<double>();
      else if (key == "shift") shift = val.get<double>();
      else if (key == "method") method = val.get<std::string>();
      else if (key == "t") strategy.t = val.get<double>();
      else if (key == "k") strategy.k = val.get<std::size_t>();
      else if (key == "gamma") strategy.gamma = val.get<double>();
      else if (key == "replacement") strategy.with_replacement = val.get<bool>();
      else if (key == "averaged") strategy.averaged = val.get<bool>();
      else if (key == "naive_batch") strategy.allow_naive_batch = val.get<bool>();
      else if (key == "x0") x0 = val.get<std::string>();
      else if (key == "tol") tol = val.get<double>();
      else if (key == "max_col_access") max_col_access = val.get<std::uint64_t>();
      else if (key == "seeds") seeds = val.get<std::uint64_t>();
      else if (key == "trace_every") trace_every = val.get<std::uint64_t>();
      else if (key == "threads") threads = val.get<unsigned>();
      else if (key == "out") out = val.get<std::string>();
      else if (key == "methods") continue;  // bench only
      else throw UsageError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config: bad value for '" + key + "': " + e.what());
    }
  }
  if (sources > 1) throw UsageError("config: give exactly one of matrix, synthetic, hubbard");
}

void RunConfig::validate() const {
  if (source == SourceKind::None) throw UsageError("no matrix source: use --matrix, --synthetic or --hubbard");
  if (!(tol > 0.0)) throw UsageError("--tol must be positive");
  if (seeds == 0) throw UsageError("--seeds must be at least 1");
  if (threads == 0) throw UsageError("--threads must be at least 1");
  try {
    parse_method(method, strategy);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.tol = tol;
  e.max_col_access = max_col_access;
  e.seeds.clear();
  for (std::uint64_t s = 0; s < seeds; ++s) e.seeds.push_back(s);
  e.trace_every = trace_every;
  e.threads = threads;
  return e;
}

Problem build_problem(const RunConfig& cfg) {
  Problem p;
  std::ostringstream d;
  double a = 1.0, b = 0.0;
  switch (cfg.source) {
    case SourceKind::Dense:
      p.base = std::make_shared<DenseSymmetric>(load_dense(cfg.source_arg));
      d << "dense " << cfg.source_arg << " (n=" << p.base->dim() << ")";
      break;
    case SourceKind::Synthetic: {
      const SyntheticSpec s = parse_synthetic(cfg.source_arg);
      p.base = std::make_shared<DenseSymmetric>(
          build_synthetic(SpectrumSpec::leading_plus_uniform(s.n, s.lambda1, s.seed, s.lo, s.hi)));
      d << "synthetic n=" << s.n << " l1=" << s.lambda1 << " rest on [" << s.lo << "," << s.hi
        << ") seed=" << s.seed;
      break;
    }
    case SourceKind::Hubbard: {
      std::size_t cache = 0;
      const hubbard::LatticeSpec s = parse_lattice(cfg.source_arg, &cache);
      auto h = std::make_shared<hubbard::HubbardOracle>(s, cache);
      p.hubbard = h;
      p.base = h;
      // The solvers need a positive leading eigenvalue, so default to 100 I - H.
      a = -1.0;
      b = 100.0;
      d << "hubbard " << s.l1 << "x" << s.l2 << " " << s.n_up << "+" << s.n_down << " U=" << s.u
        << " (dim " << h->dim() << ")";
      break;
    }
    case SourceKind::None:
      throw UsageError("no matrix source");
  }
  a = cfg.scale.value_or(a);
  b = cfg.shift.value_or(b);
  p.op = (a == 1.0 && b == 0.0) ? p.base : shift_scale(p.base, a, b);
  if (p.op != p.base) d << ", operator " << a << "*A + " << b << "*I";
  p.description = d.str();
  return p;
}

std::vector<double> build_x0(const RunConfig& cfg, const Problem& p) {
  const Index n = p.op->dim();
  const std::string text = cfg.x0.value_or(p.hubbard ? "10e_HF" : "e1");
  const X0Spec s = parse_x0(text);
  std::vector<double> x(n, 0.0);
  if (!s.file.empty()) {
    std::ifstream in(s.file);
    if (!in) throw UsageError("x0: cannot open " + s.file.string());
    x.clear();
    double v;
    while (in >> v) x.push_back(v);
    if (!in.eof()) throw UsageError("x0: non-numeric entry in " + s.file.string());
    if (x.size() != n)
      throw UsageError("x0: " + s.file.string() + " has " + std::to_string(x.size()) + " entries, expected " +
                       std::to_string(n));
    return x;
  }
  Index j;
  if (s.index) j = *s.index;
  else if (p.hubbard) j = p.hubbard->hf_index();
  else throw UsageError("x0: e_HF needs a Hubbard source");
  if (j >= n) throw UsageError("x0: index " + std::to_string(j + 1) + " exceeds dimension " + std::to_string(n));
  x[j] = s.amplitude;
  return x;
}

}  // namespace cdlevp::cli
