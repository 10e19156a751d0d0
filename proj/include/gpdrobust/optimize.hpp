#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "linalg.hpp"

namespace gpdrobust {

struct MinimizeResult {
    Vec2 x;
    double fx = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Nelder-Mead simplex in two dimensions. Non-finite values count as +inf.
template <class F>
MinimizeResult nelder_mead(F&& f, Vec2 x0, Vec2 step, double ftol = 1e-13, double xtol = 1e-10,
                           int max_iter = 4000) {
    auto eval = [&](const Vec2& x) {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::array<Vec2, 3> s{x0, x0 + Vec2{step[0], 0.0}, x0 + Vec2{0.0, step[1]}};
    std::array<double, 3> fs{eval(s[0]), eval(s[1]), eval(s[2])};
    int it = 0;
    for (; it < max_iter; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::array<Vec2, 3> ss{s[idx[0]], s[idx[1]], s[idx[2]]};
        std::array<double, 3> ff{fs[idx[0]], fs[idx[1]], fs[idx[2]]};
        s = ss;
        fs = ff;
        const double diam = std::max(max_abs(s[1] - s[0]), max_abs(s[2] - s[0]));
        if (std::isfinite(fs[2]) && fs[2] - fs[0] <= ftol * (std::abs(fs[0]) + 1e-300) && diam <= xtol * (1.0 + max_abs(s[0])))
            return {s[0], fs[0], it, true};
        if (diam <= 1e-15 * (1.0 + max_abs(s[0]))) return {s[0], fs[0], it, std::isfinite(fs[0])};

        const Vec2 c = 0.5 * (s[0] + s[1]);
        const Vec2 xr = c + (c - s[2]);
        const double fr = eval(xr);
        if (fr < fs[0]) {
            const Vec2 xe = c + 2.0 * (c - s[2]);
            const double fe = eval(xe);
            if (fe < fr) { s[2] = xe; fs[2] = fe; }
            else { s[2] = xr; fs[2] = fr; }
        } else if (fr < fs[1]) {
            s[2] = xr;
            fs[2] = fr;
        } else {
            const bool outside = fr < fs[2];
            const Vec2 xc = outside ? c + 0.5 * (xr - c) : c + 0.5 * (s[2] - c);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fs[2])) {
                s[2] = xc;
                fs[2] = fc;
            } else {
                for (int i = 1; i < 3; ++i) {
                    s[i] = s[0] + 0.5 * (s[i] - s[0]);
                    fs[i] = eval(s[i]);
                }
            }
        }
    }
    int best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    return {s[best], fs[best], it, false};
}

// BFGS with Armijo backtracking. `grad` returns the gradient of f;
// `done(x, g)` decides convergence. Steps longer than max_step are shortened.
template <class F, class G, class Done>
MinimizeResult bfgs(F&& f, G&& grad, Done&& done, Vec2 x, Mat2 H, int max_iter = 500,
                    double max_step = std::numeric_limits<double>::infinity()) {
    double fx = f(x);
    if (!std::isfinite(fx)) return {x, fx, 0, false};
    Vec2 g = grad(x);
    int it = 0;
    for (; it < max_iter; ++it) {
        if (done(x, g)) return {x, fx, it, true};
        Vec2 d = -(H * g);
        if (!(dot(d, g) < 0.0)) {
            H = Mat2::identity();
            d = -g;
        }
        if (const double len = norm(d); len > max_step) d = d * (max_step / len);
        const double slope = dot(d, g);
        double t = 1.0;
        Vec2 xn;
        double fn = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xn = x + t * d;
            fn = f(xn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // Line search stalled; accept if the gradient is already tiny.
            return {x, fx, it, done(x, g)};
        }
        const Vec2 gn = grad(xn);
        const Vec2 sv = xn - x, yv = gn - g;
        const double sy = dot(sv, yv);
        if (sy > 1e-300) {
            const double rho = 1.0 / sy;
            const Mat2 I = Mat2::identity();
            const Mat2 L = I - rho * outer(sv, yv);
            H = L * H * transpose(L) + rho * outer(sv, sv);
        }
        x = xn;
        fx = fn;
        g = gn;
    }
    return {x, fx, it, done(x, g)};
}

} // namespace gpdrobust
