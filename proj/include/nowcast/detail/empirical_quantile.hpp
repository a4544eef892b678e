#pragma once

#include "nowcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nowcast::detail {

/// Linear interpolation between order statistics at h = (n - 1) p (type 7).
[[nodiscard]] inline double type7_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw LengthError("empirical quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("empirical quantile level must lie in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace nowcast::detail
