#pragma once

#include <cmath>

namespace gpdrobust::special {

// log1p(t)/t, continuous at 0
inline double log1p_ratio(double t) {
    if (std::abs(t) < 1e-4) return 1.0 - t / 2.0 + t * t / 3.0 - t * t * t / 4.0;
    return std::log1p(t) / t;
}

// expm1(t)/t
inline double expm1_ratio(double t) {
    if (std::abs(t) < 1e-4) return 1.0 + t / 2.0 + t * t / 6.0 + t * t * t / 24.0;
    return std::expm1(t) / t;
}

// (expm1(t) - t)/t^2
inline double expm1_ratio2(double t) {
    if (std::abs(t) < 1e-3) return 0.5 + t / 6.0 + t * t / 24.0 + t * t * t / 120.0 + t * t * t * t / 720.0;
    return (std::expm1(t) - t) / (t * t);
}

// (expm1(t) - t - t^2/2)/t^3
inline double expm1_ratio3(double t) {
    if (std::abs(t) < 1e-2)
        return 1.0 / 6.0 + t / 24.0 + t * t / 120.0 + t * t * t / 720.0 + t * t * t * t / 5040.0;
    return (std::expm1(t) - t - 0.5 * t * t) / (t * t * t);
}

} // namespace gpdrobust::special
