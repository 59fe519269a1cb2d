#pragma once

#include <string>
#include <string_view>

#include "cdlevp/engine.hpp"

namespace cdlevp {

/// A named solver: either the power method or a coordinate strategy.
struct Method {
  std::string name;
  bool power = false;
  StrategyConfig cfg;

  /// True when repeated runs cannot differ, so one seed suffices.
  bool deterministic() const noexcept;
  /// Column accesses charged per iteration on an n-dimensional operator.
  std::size_t accesses_per_iteration(Index n) const noexcept;
};

/// Parses names such as "GCD-LS-LS", "SCD-Grad-LS(2)", "SCD-Uni-Grad",
/// "Grad-vecLS" or "PM". Batch size, stepsize and flags come from `base`;
/// a "(t)" suffix overrides base.t. Throws std::invalid_argument with the
/// supported forms on anything else.
Method parse_method(std::string_view name, const StrategyConfig& base = {});

/// Help text listing the accepted names.
std::string supported_methods();

}  // namespace cdlevp
