#include "opclass/stats.hpp"

#include "opclass/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace opclass {

double percentile_linear(std::span<const double> values, double p) {
    if (!(p >= 0.0 && p <= 100.0)) {
        throw ConfigError("percentile must lie in [0, 100], got " + std::to_string(p));
    }
    if (values.empty()) {
        return 0.0;
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) {
        return sorted[lo];
    }
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

} // namespace opclass
