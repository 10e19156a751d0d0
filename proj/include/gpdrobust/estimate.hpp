#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "gpd.hpp"

namespace gpdrobust {

enum class FailureReason { NoRoot, DegenerateQuantiles, NonPositiveScale, IterationLimit, StartFailed, InvalidInput };

inline std::string_view to_string(FailureReason r) {
    switch (r) {
    case FailureReason::NoRoot: return "no-root";
    case FailureReason::DegenerateQuantiles: return "degenerate-quantiles";
    case FailureReason::NonPositiveScale: return "non-positive-scale";
    case FailureReason::IterationLimit: return "iteration-limit";
    case FailureReason::StartFailed: return "start-failed";
    case FailureReason::InvalidInput: return "invalid-input";
    }
    return "?";
}

struct Diagnostics {
    int iterations = 0;
    int attempts = 0;
    std::optional<double> k_used;
};

struct EstimateResult {
    GpdParams params;
    bool ok = false;
    std::optional<FailureReason> failure_reason;
    Diagnostics diagnostics;

    static EstimateResult success(GpdParams p, Diagnostics d = {}) {
        if (!(p.beta > 0.0) || !std::isfinite(p.beta) || !std::isfinite(p.xi))
            return failure(FailureReason::NonPositiveScale, d);
        return {p, true, std::nullopt, d};
    }
    static EstimateResult failure(FailureReason r, Diagnostics d = {}) {
        return {GpdParams{}, false, r, d};
    }
};

inline std::vector<double> sorted_copy(std::span<const double> x) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return s;
}

// Midpoint of the central order statistics for even n.
inline double median_sorted(std::span<const double> s) {
    const std::size_t n = s.size();
    if (n == 0) throw invalid_parameter("median of an empty sample");
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

inline double sample_median(std::span<const double> x) { return median_sorted(sorted_copy(x)); }

// Type-1 quantile: smallest order statistic with empirical cdf ≥ alpha.
inline double quantile_type1_sorted(std::span<const double> s, double alpha) {
    const std::size_t n = s.size();
    if (n == 0) throw invalid_parameter("quantile of an empty sample");
    const double pos = std::ceil(alpha * static_cast<double>(n) - 1e-12);
    const std::size_t k = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(n)));
    return s[k - 1];
}

inline std::vector<double> scaled(std::span<const double> x, double c) {
    std::vector<double> out(x.begin(), x.end());
    for (auto& v : out) v *= c;
    return out;
}

} // namespace gpdrobust
