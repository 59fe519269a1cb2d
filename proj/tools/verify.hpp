#pragma once

#include <ostream>

namespace cdlevp::cli {

/// Landscape and engine invariant checks on small random instances.
/// Prints one line per check; returns the number of failures.
int run_verify(std::ostream& out, unsigned seed);

}  // namespace cdlevp::cli
