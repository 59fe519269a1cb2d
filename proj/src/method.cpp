#include "cdlevp/method.hpp"

#include <charconv>
#include <stdexcept>
#include <vector>

namespace cdlevp {

bool Method::deterministic() const noexcept {
  if (power) return true;
  return cfg.pick == PickRule::Cyclic || cfg.pick == PickRule::GaussSouthwell ||
         cfg.pick == PickRule::GreedyLS || cfg.pick == PickRule::All;
}

std::size_t Method::accesses_per_iteration(Index n) const noexcept {
  if (power || cfg.pick == PickRule::All) return n;
  return cfg.k;
}

std::string supported_methods() {
  return "PM, Grad-vecLS, CD-Cyc-Grad, CD-Cyc-LS, GCD-Grad-LS, GCD-Grad-Grad, GCD-LS-LS, "
         "SCD-Uni-{Grad,LS,vecLS}, SCD-Grad-{Grad,LS,vecLS}[(t)]";
}

namespace {

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == '-') {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  return parts;
}

[[noreturn]] void unknown(std::string_view name) {
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "'; supported: " + supported_methods());
}

}  // namespace

Method parse_method(std::string_view name, const StrategyConfig& base) {
  Method m;
  m.name = std::string(name);
  m.cfg = base;

  std::string_view body = name;
  bool has_t = false;
  if (!body.empty() && body.back() == ')') {
    const auto open = body.rfind('(');
    if (open == std::string_view::npos) unknown(name);
    const std::string_view num = body.substr(open + 1, body.size() - open - 2);
    double t = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), t);
    if (ec != std::errc() || ptr != num.data() + num.size() || !(t >= 0.0)) unknown(name);
    m.cfg.t = t;
    has_t = true;
    body = body.substr(0, open);
  }

  if (body == "PM" && !has_t) {
    m.power = true;
    m.cfg.k = 1;
    return m;
  }
  if (body == "Grad-vecLS" && !has_t) {
    m.cfg.pick = PickRule::All;
    m.cfg.update = UpdateRule::VecLS;
    return m;
  }

  const auto parts = split(body);
  if (parts.size() != 3) unknown(name);
  const std::string_view family = parts[0], pick = parts[1], update = parts[2];

  if (update == "Grad") m.cfg.update = UpdateRule::FixedGrad;
  else if (update == "LS") m.cfg.update = UpdateRule::CoordLS;
  else if (update == "vecLS") m.cfg.update = UpdateRule::VecLS;
  else unknown(name);

  if (family == "CD" && pick == "Cyc") {
    m.cfg.pick = PickRule::Cyclic;
  } else if (family == "GCD" && pick == "Grad") {
    m.cfg.pick = PickRule::GaussSouthwell;
  } else if (family == "GCD" && pick == "LS") {
    m.cfg.pick = PickRule::GreedyLS;
  } else if (family == "SCD" && pick == "Uni") {
    m.cfg.pick = PickRule::GradPower;
    m.cfg.t = 0.0;
  } else if (family == "SCD" && pick == "Grad") {
    m.cfg.pick = PickRule::GradPower;
  } else {
    unknown(name);
  }
  if (has_t && m.cfg.pick != PickRule::GradPower) unknown(name);
  if (has_t && pick == "Uni") unknown(name);
  if (m.cfg.update == UpdateRule::VecLS && m.cfg.pick != PickRule::GradPower) unknown(name);
  if (m.cfg.pick == PickRule::GreedyLS && m.cfg.update != UpdateRule::CoordLS) unknown(name);
  return m;
}

}  // namespace cdlevp
