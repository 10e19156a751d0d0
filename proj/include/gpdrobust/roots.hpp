#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "errors.hpp"

namespace gpdrobust {

struct RootResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Brent's method: bisection safeguarding secant / inverse quadratic steps.
// Requires f(a), f(b) of opposite sign (or one of them zero).
template <class F>
RootResult brent_root(F&& f, double a, double b, double xtol = 1e-12, int max_iter = 300) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return {a, 0.0, 0, true};
    if (fb == 0.0) return {b, 0.0, 0, true};
    if (std::isnan(fa) || std::isnan(fb) || (fa > 0.0) == (fb > 0.0))
        throw bracket_error("root not bracketed");
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 1; it <= max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0) return {b, fb, it, true};
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
        if (std::isnan(fb)) throw bracket_error("objective returned NaN inside bracket");
    }
    return {b, fb, max_iter, false};
}

// Grows hi geometrically until f changes sign relative to f(lo).
template <class F>
std::pair<double, double> expand_upper(F&& f, double lo, double hi, double factor = 2.0, int max_steps = 200) {
    const double flo = f(lo);
    for (int i = 0; i < max_steps; ++i) {
        const double fhi = f(hi);
        if ((fhi > 0.0) != (flo > 0.0) || fhi == 0.0) return {lo, hi};
        lo = hi;
        hi *= factor;
    }
    throw bracket_error("could not bracket root by expansion");
}

} // namespace gpdrobust
