#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"

namespace asfkit::stats {

/// Median of a non-empty sample; even counts average the two middle values.
/// Takes its argument by value because it reorders it.
inline double median(std::vector<double> v)
{
    if (v.empty()) throw error("median of empty sample");
    const auto n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Unscaled median absolute deviation about `center`.
inline double mad(std::span<const double> v, double center)
{
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double x : v) dev.push_back(std::abs(x - center));
    return median(std::move(dev));
}

/// Root mean square of a sample, accumulated in one pass.
inline double rms(std::span<const double> v)
{
    if (v.empty()) throw error("rms of empty sample");
    double sum_sq = 0.0;
    for (double x : v) sum_sq += x * x;
    return std::sqrt(sum_sq / static_cast<double>(v.size()));
}

/// Nearest-rank percentile, q in (0, 1].
inline double percentile(std::vector<double> v, double q)
{
    if (v.empty()) throw error("percentile of empty sample");
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
}

} // namespace asfkit::stats
