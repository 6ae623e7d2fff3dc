#pragma once

#include <span>

namespace opclass {

/// Percentile with linear interpolation between order statistics
/// (position = p/100 * (N-1)). `p` in [0, 100]; empty input yields 0.
double percentile_linear(std::span<const double> values, double p);

} // namespace opclass
