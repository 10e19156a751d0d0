#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "gpd.hpp"
#include "linalg.hpp"

namespace gpdrobust {

// Fixed-length vector of reals used for bundled integrands.
template <std::size_t N>
struct VecN {
    std::array<double, N> v{};

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }
    constexpr VecN& operator+=(const VecN& o) { for (std::size_t i = 0; i < N; ++i) v[i] += o.v[i]; return *this; }
    constexpr VecN& operator*=(double s) { for (auto& x : v) x *= s; return *this; }
    friend constexpr VecN operator+(VecN a, const VecN& b) { return a += b; }
    friend constexpr VecN operator-(VecN a, const VecN& b) { for (std::size_t i = 0; i < N; ++i) a.v[i] -= b.v[i]; return a; }
    friend constexpr VecN operator*(double s, VecN a) { return a *= s; }
};

template <std::size_t N>
inline double max_abs(const VecN<N>& a) {
    double r = 0.0;
    for (double x : a.v) r = std::max(r, std::abs(x));
    return r;
}
inline double max_abs(double a) { return std::abs(a); }

namespace detail {

inline constexpr int gl_order = 20;

struct GaussLegendre {
    std::array<double, gl_order> x{};
    std::array<double, gl_order> w{};

    GaussLegendre() {
        constexpr int n = gl_order;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 1; j <= n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

inline const GaussLegendre& gauss_legendre() {
    static const GaussLegendre rule;
    return rule;
}

template <class R, class F>
R gl_panel(F& h, double a, double b) {
    const auto& rule = gauss_legendre();
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    R acc{};
    for (int i = 0; i < gl_order; ++i) acc += (rule.w[i] * r) * h(c + r * rule.x[i]);
    return acc;
}

} // namespace detail

struct QuadratureSettings {
    double tol = 1e-10;
    int max_depth = 40;
    // Smallest v handled; the mass below it is below any tolerance we use.
    double v_floor = 0x1p-62;
};

// Adaptive composite Gauss-Legendre on (0,1) with dyadic panels towards both
// endpoints. `breaks` are extra panel edges in (0,1) where h is not smooth.
template <class F>
auto integrate_unit(F&& h, std::span<const double> breaks, const QuadratureSettings& s = {})
    -> std::decay_t<decltype(h(0.5))> {
    using R = std::decay_t<decltype(h(0.5))>;
    std::vector<double> edges;
    const double lo = s.v_floor;
    for (double e = lo; e < 0.5; e *= 2.0) edges.push_back(e);
    edges.push_back(0.5);
    for (int k = 2; k <= 8; ++k) edges.push_back(1.0 - std::ldexp(1.0, -k));
    edges.push_back(1.0);
    for (double e : breaks)
        if (e > lo && e < 1.0 && std::isfinite(e)) edges.push_back(e);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, a); }),
                edges.end());

    struct Panel {
        double a, b;
        R whole;
        double tol;
        int depth;
    };
    R total{};
    double err_total = 0.0;
    bool failed = false;
    const double panel_tol = s.tol / static_cast<double>(edges.size());
    std::vector<Panel> stack;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i], b = edges[i + 1];
        if (!(b > a)) continue;
        stack.push_back({a, b, detail::gl_panel<R>(h, a, b), panel_tol, 0});
        while (!stack.empty()) {
            Panel p = stack.back();
            stack.pop_back();
            const double m = 0.5 * (p.a + p.b);
            const R left = detail::gl_panel<R>(h, p.a, m);
            const R right = detail::gl_panel<R>(h, m, p.b);
            const R halves = left + right;
            const double err = max_abs(halves - p.whole);
            if (!std::isfinite(err)) throw quadrature_error("non-finite integrand value", err);
            const double floor = 1e-14 * max_abs(halves);
            if (err <= std::max(p.tol, floor) || p.depth >= s.max_depth || m <= p.a || m >= p.b) {
                if (err > std::max(p.tol, floor)) failed = true;
                total += halves;
                err_total += err;
                continue;
            }
            const double child_tol = p.tol / std::numbers::sqrt2;
            stack.push_back({m, p.b, right, child_tol, p.depth + 1});
            stack.push_back({p.a, m, left, child_tol, p.depth + 1});
        }
    }
    if (failed && err_total > s.tol)
        throw quadrature_error("quadrature did not reach the requested tolerance", err_total);
    return total;
}

// E_θ g(X) by the substitution x = x(v), v uniform on (0,1).
template <class F>
auto expect(F&& g, const GpdParams& p, const QuadratureSettings& s = {}, std::span<const double> x_breaks = {})
    -> std::decay_t<decltype(g(0.0))> {
    p.validate();
    std::vector<double> vb;
    vb.reserve(x_breaks.size());
    for (double x : x_breaks)
        if (x > p.mu && x < upper_endpoint(p)) vb.push_back(survival(x, p));
    auto h = [&](double v) { return g(x_of_v(v, p)); };
    return integrate_unit(h, vb, s);
}

template <class F>
auto expect(F&& g, const GpdParams& p, double tol, std::span<const double> x_breaks = {}) {
    QuadratureSettings s;
    s.tol = tol;
    return expect(std::forward<F>(g), p, s, x_breaks);
}

} // namespace gpdrobust
