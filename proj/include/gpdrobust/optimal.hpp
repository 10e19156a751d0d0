#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "gpd.hpp"
#include "influence.hpp"
#include "lagrange.hpp"
#include "quadrature.hpp"
#include "roots.hpp"

namespace gpdrobust {

struct SolverSettings {
    double quad_tol = 1e-10;
    double fp_tol = 1e-7;
    int max_iter = 500;
    // n_β at the parameter's own β when unset
    std::optional<WeightedNorm> norm;

    WeightedNorm norm_at(const GpdParams& p) const { return norm ? *norm : WeightedNorm{p.beta}; }
};

struct OptimalSolution {
    LagrangeTriple triple;
    InfluenceFunction psi;
    int iterations = 0;
    std::optional<double> radius;
};

namespace detail {

inline Vec2 tail_direction(const GpdParams& p) {
    if (p.xi >= 0.0) return {1.0, 0.0};
    const Vec2 u{1.0, -p.xi / p.beta};
    return u / norm(u);
}

// x where n(AΛ(x) − a) crosses b.
inline std::vector<double> clip_crossings(const LagrangeTriple& t, const GpdParams& p, const WeightedNorm& nb) {
    std::vector<double> out;
    if (!std::isfinite(t.b)) return out;
    auto h = [&](double x) { return nb(t.A * scores(x, p) - t.a) - t.b; };
    constexpr int n = 400;
    const double lt0 = std::log(1e-9), lt1 = std::log(60.0);
    double xprev = p.mu, hprev = h(p.mu);
    for (int j = 0; j < n; ++j) {
        const double tv = std::exp(lt0 + (lt1 - lt0) * j / (n - 1.0));
        const double x = x_of_v(std::exp(-tv), p);
        if (!(x > xprev) || !(x < upper_endpoint(p))) continue;
        const double hx = h(x);
        if ((hx > 0.0) != (hprev > 0.0)) {
            try {
                out.push_back(brent_root(h, xprev, x, 1e-13 * std::max(1.0, x)).x);
            } catch (const bracket_error&) {
            }
        }
        xprev = x;
        hprev = hx;
    }
    return out;
}

enum class WeightRule { Clip, Normalize };

struct WeightedMoments {
    double w = 0.0;
    Vec2 lw;
    Mat2 llw;
};

inline WeightedMoments weighted_moments(const LagrangeTriple& t, WeightRule rule, const GpdParams& p,
                                        const WeightedNorm& nb, double tol) {
    const auto br = clip_crossings(t, p, nb);
    auto g = [&](double x) {
        const Vec2 l = scores(x, p);
        const double n = nb(t.A * l - t.a);
        double w;
        if (rule == WeightRule::Normalize) w = 1.0 / n;
        else w = (std::isfinite(t.b) && n > t.b) ? t.b / n : 1.0;
        return VecN<6>{{w, w * l[0], w * l[1], w * l[0] * l[0], w * l[0] * l[1], w * l[1] * l[1]}};
    };
    const auto r = expect(g, p, tol, br);
    return {r[0], {r[1], r[2]}, Mat2{r[3], r[4], r[4], r[5]}};
}

// E (n(Y) − b)₊
inline double hinge_expectation(const LagrangeTriple& t, const GpdParams& p, const WeightedNorm& nb, double tol) {
    const auto br = clip_crossings(t, p, nb);
    auto g = [&](double x) { return std::max(0.0, nb(t.A * scores(x, p) - t.a) - t.b); };
    return expect(g, p, tol, br);
}

inline double rel_change(const LagrangeTriple& x, const LagrangeTriple& y) {
    double c = max_abs(x.A - y.A) / std::max(1e-300, max_abs(y.A));
    c = std::max(c, max_abs(x.a - y.a) / std::max(1.0, max_abs(y.a)));
    if (std::isfinite(x.b) && std::isfinite(y.b)) c = std::max(c, std::abs(x.b - y.b) / y.b);
    return c;
}

// (A, a) from the centering and standardization conditions for weights fixed by t.
inline LagrangeTriple center_standardize(const LagrangeTriple& t, WeightRule rule, const GpdParams& p,
                                         const WeightedNorm& nb, double tol) {
    const WeightedMoments m = weighted_moments(t, rule, p, nb, tol);
    const Vec2 z = m.lw / m.w;
    const Mat2 Q = m.llw - m.w * outer(z, z);
    const Mat2 Qi = inverse(Q);
    LagrangeTriple out = t;
    if (rule == WeightRule::Normalize) {
        out.b = Qi(0, 0);
        out.A = Qi * (1.0 / Qi(0, 0));
    } else {
        out.A = Qi;
    }
    out.a = out.A * z;
    return out;
}

} // namespace detail

// The IF attached to a triple: Y·min{1, b/n(Y)}, or b·Y/n(Y) for MBRE.
inline InfluenceFunction make_optimal_if(IfKind kind, const GpdParams& p, const LagrangeTriple& t,
                                         const WeightedNorm& nb, std::optional<double> radius = std::nullopt) {
    const bool normalize = kind == IfKind::MBRE;
    auto eval = [p, t, nb, normalize](double x) {
        const Vec2 y = t.A * scores(x, p) - t.a;
        if (!std::isfinite(t.b)) return y;
        const double n = nb(y);
        if (normalize) return y * (t.b / n);
        return n > t.b ? y * (t.b / n) : y;
    };
    const bool bounded = std::isfinite(t.b);
    std::optional<Vec2> tail;
    if (bounded) {
        const Vec2 d = t.A * detail::tail_direction(p);
        tail = d * (t.b / nb(d));
    }
    IfMetadata meta;
    meta.triple = t;
    meta.radius = radius;
    return {kind, p, eval, bounded, normalize ? std::vector<double>{} : detail::clip_crossings(t, p, nb), tail, meta};
}

inline LagrangeTriple initial_triple(const GpdParams& p, const WeightedNorm& nb) {
    const Mat2 Ii = fisher_info_inverse(p);
    return {Ii, {0.0, 0.0}, 2.0 * std::sqrt(nb.trace(Ii))};
}

inline OptimalSolution mle_limit(IfKind kind, const GpdParams& p, const WeightedNorm& nb, std::optional<double> r) {
    LagrangeTriple t{fisher_info_inverse(p), {0.0, 0.0}, std::numeric_limits<double>::infinity()};
    return {t, make_optimal_if(kind, p, t, nb, r), 0, r};
}

inline OptimalSolution solve_mbre(const GpdParams& p, const SolverSettings& s = {}) {
    p.validate();
    const WeightedNorm nb = s.norm_at(p);
    LagrangeTriple t = initial_triple(p, nb);
    t.A = t.A * (1.0 / t.A(0, 0));
    double change = 0.0;
    for (int it = 1; it <= s.max_iter; ++it) {
        LagrangeTriple next = detail::center_standardize(t, detail::WeightRule::Normalize, p, nb, s.quad_tol);
        change = detail::rel_change(next, t);
        t = next;
        if (change < s.fp_tol) return {t, make_optimal_if(IfKind::MBRE, p, t, nb), it, std::nullopt};
    }
    throw solver_error("MBRE fixed point did not converge", s.max_iter, change);
}

// Radius implied by a clip: r(b) = sqrt(E(n(Y) − b)₊ / b).
inline double implied_radius(const LagrangeTriple& t, const GpdParams& p, const WeightedNorm& nb, double tol) {
    if (!std::isfinite(t.b)) return 0.0;
    return std::sqrt(detail::hinge_expectation(t, p, nb, tol) / t.b);
}

inline OptimalSolution solve_omse(const GpdParams& p, double r, const SolverSettings& s = {},
                                  std::optional<LagrangeTriple> start = std::nullopt) {
    p.validate();
    if (!(r > 0.0)) throw invalid_parameter("solve_omse: radius must be positive");
    const WeightedNorm nb = s.norm_at(p);
    if (r < 1e-4) return mle_limit(IfKind::OMSE, p, nb, r);
    if (r > 1e3) {
        OptimalSolution m = solve_mbre(p, s);
        m.radius = r;
        return m;
    }
    LagrangeTriple t = start ? *start : initial_triple(p, nb);
    double change = 0.0;
    for (int it = 1; it <= s.max_iter; ++it) {
        LagrangeTriple next = detail::center_standardize(t, detail::WeightRule::Clip, p, nb, s.quad_tol);
        auto h = [&](double b) {
            LagrangeTriple c = next;
            c.b = b;
            return detail::hinge_expectation(c, p, nb, s.quad_tol) - r * r * b;
        };
        double lo = 1e-3 * next.b, hi = next.b;
        if (h(hi) > 0.0) std::tie(lo, hi) = expand_upper(h, hi, 2.0 * hi, 2.0, 60);
        else
            for (int k = 0; h(lo) < 0.0; ++k) {
                if (k == 30) throw solver_error("OMSE clip equation has no positive root", it, 0.0);
                hi = lo;
                lo *= 1e-2;
            }
        next.b = brent_root(h, lo, hi, 1e-12 * hi).x;
        if (next.b > 1e4) return mle_limit(IfKind::OMSE, p, nb, r);
        change = detail::rel_change(next, t);
        t = next;
        if (change < s.fp_tol) return {t, make_optimal_if(IfKind::OMSE, p, t, nb, r), it, r};
    }
    throw solver_error("OMSE fixed point did not converge", s.max_iter, change);
}

inline OptimalSolution solve_obre(const GpdParams& p, double b, const SolverSettings& s = {},
                                  std::optional<double> b_mbre = std::nullopt,
                                  std::optional<LagrangeTriple> start = std::nullopt) {
    p.validate();
    const WeightedNorm nb = s.norm_at(p);
    const double bm = b_mbre ? *b_mbre : solve_mbre(p, s).triple.b;
    if (!(b > bm)) throw solver_error("OBRE clip must exceed the minimal bias bound", 0, bm - b);
    if (!std::isfinite(b)) return mle_limit(IfKind::OBRE, p, nb, 0.0);
    LagrangeTriple t = start ? *start : initial_triple(p, nb);
    t.b = b;
    double change = 0.0;
    for (int it = 1; it <= s.max_iter; ++it) {
        LagrangeTriple next = detail::center_standardize(t, detail::WeightRule::Clip, p, nb, s.quad_tol);
        change = detail::rel_change(next, t);
        t = next;
        if (change < s.fp_tol) {
            const double r = implied_radius(t, p, nb, s.quad_tol);
            return {t, make_optimal_if(IfKind::OBRE, p, t, nb, r), it, r};
        }
    }
    throw solver_error("OBRE fixed point did not converge", s.max_iter, change);
}

inline double ideal_efficiency(const OptimalSolution& sol, const GpdParams& p, const SolverSettings& s) {
    const WeightedNorm nb = s.norm_at(p);
    return nb.trace(fisher_info_inverse(p)) / nb.trace(as_var(sol.psi, s.quad_tol));
}

// OBRE whose clip makes g(b) vanish; g increasing in b from negative values at b_MBRE.
template <class G>
inline OptimalSolution solve_obre_by(const GpdParams& p, const SolverSettings& s, G&& g, IfKind kind) {
    const OptimalSolution mb = solve_mbre(p, s);
    const double bm = mb.triple.b;
    std::optional<LagrangeTriple> warm;
    auto f = [&](double b) {
        OptimalSolution o = solve_obre(p, b, s, bm, warm);
        warm = o.triple;
        return g(o, b, bm);
    };
    double lo = bm * 1.02, hi = bm * 1.3;
    while (f(lo) > 0.0 && lo > bm * 1.0005) lo = bm + 0.5 * (lo - bm);
    int guard = 0;
    while (f(hi) < 0.0) {
        lo = hi;
        hi = bm + 2.0 * (hi - bm);
        if (++guard > 40) throw bracket_error("could not bracket the OBRE clip");
    }
    warm.reset();
    const double b = brent_root(f, lo, hi, 1e-9 * bm).x;
    OptimalSolution o = solve_obre(p, b, s, bm, warm);
    o.psi = make_optimal_if(kind, p, o.triple, s.norm_at(p), o.radius);
    return o;
}

// Radius-maximin: eff.id equal to the bias ratio (b_MBRE/b)².
inline OptimalSolution solve_rmxe(const GpdParams& p, const SolverSettings& s = {}) {
    return solve_obre_by(p, s, [&](const OptimalSolution& o, double b, double bm) {
        return ideal_efficiency(o, p, s) - (bm / b) * (bm / b);
    }, IfKind::RMXE);
}

// OBRE with prescribed ideal efficiency.
inline OptimalSolution tune_obre_efficiency(const GpdParams& p, double target_eff_id, const SolverSettings& s = {}) {
    if (!(target_eff_id > 0.0 && target_eff_id < 1.0)) throw invalid_parameter("target efficiency must lie in (0,1)");
    return solve_obre_by(p, s, [&](const OptimalSolution& o, double, double) {
        return ideal_efficiency(o, p, s) - target_eff_id;
    }, IfKind::OBRE);
}

// r₀: where eff.id(OMSE_r) meets (b_MBRE/b_r)², refined by root-finding between grid points.
inline double least_favorable_radius(const GpdParams& p, const std::vector<double>& r_grid, const SolverSettings& s = {}) {
    if (r_grid.empty()) throw invalid_parameter("least_favorable_radius: empty grid");
    if (r_grid.size() == 1) return r_grid.front();
    const double bm = solve_mbre(p, s).triple.b;
    auto g = [&](double r) {
        const OptimalSolution o = solve_omse(p, r, s);
        return ideal_efficiency(o, p, s) - (bm / o.triple.b) * (bm / o.triple.b);
    };
    double prev_r = r_grid.front(), prev_g = g(prev_r);
    for (std::size_t i = 1; i < r_grid.size(); ++i) {
        const double gi = g(r_grid[i]);
        if ((gi > 0.0) != (prev_g > 0.0)) return brent_root(g, prev_r, r_grid[i], 1e-8).x;
        prev_r = r_grid[i];
        prev_g = gi;
    }
    throw bracket_error("least favorable radius not bracketed by the grid");
}

// OMSE risks at θ, memoized per radius; shareable across threads.
inline EfficiencyReference make_efficiency_reference(const GpdParams& p, const SolverSettings& s = {}) {
    const WeightedNorm nb = s.norm_at(p);
    EfficiencyReference ref;
    ref.trace_fisher_inverse = nb.trace(fisher_info_inverse(p));
    ref.mbre_ges = solve_mbre(p, s).triple.b;
    struct Cache {
        std::mutex mu;
        std::map<double, std::optional<double>> values;
    };
    auto cache = std::make_shared<Cache>();
    ref.omse_as_mse = [cache, p, s, nb](double r) -> std::optional<double> {
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->values.find(r);
            if (it != cache->values.end()) return it->second;
        }
        std::optional<double> v;
        try {
            const OptimalSolution o = solve_omse(p, r, s);
            const double tr = nb.trace(as_var(o.psi, s.quad_tol));
            v = as_mse(o.triple.b, tr, r);
        } catch (const std::exception&) {
            v.reset();
        }
        std::lock_guard<std::mutex> lock(cache->mu);
        cache->values.emplace(r, v);
        return v;
    };
    return ref;
}

} // namespace gpdrobust
