#pragma once
// Wilcoxon signed-rank test for paired samples.
//
// Zero differences are dropped (Wilcoxon's method, not Pratt's). Absolute
// differences are ranked with average ranks for ties, W = min(W+, W-), and the
// two-sided p-value comes from the normal approximation with tie-corrected
// variance and a 0.5 continuity correction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "a3rank/error.hpp"

namespace a3rank {

inline constexpr std::size_t kMinWilcoxonPairs = 6;

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    std::size_t n = 0;       // pairs with non-zero difference
    double z = 0.0;
    double p_two_sided = 1.0;
};

// Average ranks (1-based) of `values`; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(ErrorKind::InvariantViolation, "paired samples differ in length");
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (const double d = a[i] - b[i]; d != 0.0) diff.push_back(d);
    const std::size_t n = diff.size();
    if (n < kMinWilcoxonPairs)
        throw Error(ErrorKind::TooFewPairs, std::to_string(n) + " non-zero differences, need at least " +
                                                std::to_string(kMinWilcoxonPairs));

    std::vector<double> magnitude(n);
    std::transform(diff.begin(), diff.end(), magnitude.begin(), [](double d) { return std::abs(d); });
    const auto ranks = average_ranks(magnitude);

    WilcoxonResult res;
    res.n = n;
    for (std::size_t i = 0; i < n; ++i) (diff[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];
    res.statistic = std::min(res.w_plus, res.w_minus);

    // Tie correction: subtract sum(t^3 - t) / 48 over groups of equal magnitude.
    std::vector<double> sorted = magnitude;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const auto nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    const double numerator = std::max(std::abs(res.statistic - mean) - 0.5, 0.0);
    res.z = numerator / std::sqrt(variance);
    const double p = std::erfc(res.z / std::sqrt(2.0));
    res.p_two_sided = std::clamp(p, std::numeric_limits<double>::min(), 1.0);
    return res;
}

}  // namespace a3rank
