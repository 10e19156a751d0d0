#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "../errors.hpp"
#include "../estimate.hpp"
#include "../gpd.hpp"
#include "../influence.hpp"
#include "../optimize.hpp"
#include "../quadrature.hpp"
#include "../special.hpp"

namespace gpdrobust {

// ---------------------------------------------------------------- MLE

namespace detail {

// Mean negative log-likelihood in (ξ, log β).
inline double gpd_nll(std::span<const double> x, double xi, double log_beta) {
    if (!std::isfinite(xi) || !std::isfinite(log_beta)) return std::numeric_limits<double>::infinity();
    const double ib = std::exp(-log_beta);
    double s = 0.0;
    for (double v : x) {
        const double z = v * ib;
        const double t = xi * z;
        if (!(t > -1.0)) return std::numeric_limits<double>::infinity();
        s += (1.0 + xi) * z * special::log1p_ratio(t);
    }
    return log_beta + s / static_cast<double>(x.size());
}

inline Vec2 mean_scores(std::span<const double> x, const GpdParams& p) {
    Vec2 s;
    for (double v : x) s += scores_from_log_survival(log_survival_std((v - p.mu) / p.beta, p.xi), p);
    return s / static_cast<double>(x.size());
}

} // namespace detail

struct MleSettings {
    double score_tol = 1e-7;
    int max_iter = 500;
    double max_step = 1.0; // in (ξ, log β)
};

inline EstimateResult mle(std::span<const double> x, const GpdParams& start, const MleSettings& s = {}) {
    if (x.size() < 2) return EstimateResult::failure(FailureReason::InvalidInput);
    if (!(start.beta > 0.0) || !std::isfinite(start.xi)) return EstimateResult::failure(FailureReason::StartFailed);
    auto f = [&](const Vec2& q) { return detail::gpd_nll(x, q[0], q[1]); };
    auto grad = [&](const Vec2& q) {
        const GpdParams p{q[0], std::exp(q[1]), 0.0};
        const Vec2 ms = detail::mean_scores(x, p);
        return Vec2{-ms[0], -p.beta * ms[1]};
    };
    auto done = [&](const Vec2& q, const Vec2& g) { return std::hypot(g[0], g[1] / std::exp(q[1])) < s.score_tol; };
    Vec2 q0{start.xi, std::log(start.beta)};
    // An infeasible start (points past a finite endpoint) moves to ξ = 0.1.
    if (!std::isfinite(f(q0))) q0[0] = std::max(q0[0], 0.1);
    for (int i = 0; i < 200 && !std::isfinite(f(q0)); ++i) q0[1] += 0.5;
    Mat2 H = Mat2::identity();
    if (2.0 * q0[0] + 1.0 > 0.0) H = inverse(log_fisher_info({q0[0], std::exp(q0[1]), 0.0}));
    MinimizeResult r = bfgs(f, grad, done, q0, H, s.max_iter, s.max_step);
    if (!r.converged) r = bfgs(f, grad, done, r.x, Mat2::identity(), s.max_iter, s.max_step);
    Diagnostics d;
    d.iterations = r.iterations;
    if (r.x[0] <= -1.0) return EstimateResult::failure(FailureReason::NoRoot, d);
    if (!r.converged) return EstimateResult::failure(FailureReason::IterationLimit, d);
    return EstimateResult::success({r.x[0], std::exp(r.x[1]), 0.0}, d);
}

inline InfluenceFunction mle_if(const GpdParams& p) {
    const Mat2 Ii = fisher_info_inverse(p);
    return {IfKind::MLE, p, [p, Ii](double x) { return Ii * scores(x, p); }, false};
}

// ---------------------------------------------------------------- SMLE

struct SmleConfig {
    double r_prime = 0.7;

    double alpha(std::size_t n) const { return r_prime / std::sqrt(static_cast<double>(n)); }
    std::size_t skip_count(std::size_t n) const {
        return static_cast<std::size_t>(std::ceil(r_prime * std::sqrt(static_cast<double>(n)) - 1e-12));
    }
};

// MLE after dropping the skip_count largest observations. Ties at the cut
// leave the remaining multiset unchanged, so no ordering rule is needed.
inline EstimateResult smle(std::span<const double> x, const SmleConfig& cfg, const GpdParams& start,
                           const MleSettings& s = {}) {
    const std::size_t k = cfg.skip_count(x.size());
    if (k + 2 > x.size()) return EstimateResult::failure(FailureReason::InvalidInput);
    if (k == 0) return mle(x, start, s);
    std::vector<double> kept = sorted_copy(x);
    kept.resize(x.size() - k);
    return mle(kept, start, s);
}

// Censored-scores IF: φ(x) = Λ(min(x, u)), ψ = (E[(φ − Eφ)Λᵀ])⁻¹(φ − Eφ), u = F⁻¹(1 − α).
inline InfluenceFunction smle_if(const GpdParams& p, double alpha, double tol = 1e-12) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_parameter("smle_if needs 0 < alpha < 1");
    p.validate();
    const GpdParams p1{p.xi, 1.0, 0.0};
    const double u = quantile(1.0 - alpha, p1);
    auto phi = [p1, u](double x) { return scores(std::min(x, u), p1); };
    const std::vector<double> br{u};
    const Vec2 c = expect(phi, p1, tol, br);
    const auto m = expect([&](double x) {
        const Vec2 d = phi(x) - c;
        const Vec2 l = scores(x, p1);
        return VecN<4>{{d[0] * l[0], d[0] * l[1], d[1] * l[0], d[1] * l[1]}};
    }, p1, tol, br);
    const Mat2 Di = inverse(Mat2{m[0], m[1], m[2], m[3]});
    auto eval = [phi, c, Di](double x) { return Di * (phi(x) - c); };
    IfMetadata meta;
    meta.skip_rate = alpha;
    InfluenceFunction psi1(IfKind::SMLE, p1, eval, true, br, Di * (phi(u) - c), meta);
    return rescale_if(psi1, p.beta);
}

// ---------------------------------------------------------------- CvM MDE

// n·ω² = 1/(12n) + Σ (F_θ(x₍ᵢ₎) − (2i − 1)/(2n))² for a sorted sample.
inline double cvm_statistic(std::span<const double> sorted, const GpdParams& p) {
    const double n = static_cast<double>(sorted.size());
    double s = 1.0 / (12.0 * n);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double d = cdf(sorted[i], p) - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n);
        s += d * d;
    }
    return s;
}

inline EstimateResult mde_cvm(std::span<const double> x, const GpdParams& start) {
    if (x.size() < 2) return EstimateResult::failure(FailureReason::InvalidInput);
    if (!(start.beta > 0.0) || !std::isfinite(start.xi)) return EstimateResult::failure(FailureReason::StartFailed);
    const auto s = sorted_copy(x);
    auto f = [&](const Vec2& q) {
        if (!std::isfinite(q[0]) || !std::isfinite(q[1]) || std::abs(q[1]) > 700.0) return std::numeric_limits<double>::infinity();
        return cvm_statistic(s, {q[0], std::exp(q[1]), 0.0});
    };
    MinimizeResult r = nelder_mead(f, {start.xi, std::log(start.beta)}, {0.1, 0.1});
    r = nelder_mead(f, r.x, {0.05, 0.05});
    Diagnostics d;
    d.iterations = r.iterations;
    if (!r.converged) return EstimateResult::failure(FailureReason::IterationLimit, d);
    return EstimateResult::success({r.x[0], std::exp(r.x[1]), 0.0}, d);
}

namespace detail {

// φ̃(v) at (ξ, 1), written without 1/ξ cancellations.
inline Vec2 mde_phi(double v, double xi) {
    const double L = std::log(v);
    const double t = xi * L;
    const double v2 = v * v;
    const double c_xi = (19.0 + 5.0 * xi) / (36.0 * (3.0 + xi) * (2.0 + xi));
    const double c_beta = (5.0 + xi) / (6.0 * (3.0 + xi) * (2.0 + xi));
    const double b_xi = (0.5 * L - 0.25 - L * L * special::expm1_ratio2(t)) / (2.0 + xi);
    const double b_beta = (2.0 * L * special::expm1_ratio(t) - 1.0) / (2.0 * (2.0 + xi));
    return {c_xi + v2 * b_xi, c_beta + v2 * b_beta};
}

inline Mat2 mde_jinv(double xi) {
    const double c = 3.0 * (xi + 3.0) * (xi + 3.0);
    return c * Mat2{18.0 * (xi + 3.0) / (2.0 * xi + 9.0), -3.0, -3.0, 2.0};
}

} // namespace detail

inline InfluenceFunction mde_if(const GpdParams& p) {
    p.validate();
    const double xi = p.xi;
    const GpdParams p1{xi, 1.0, 0.0};
    const Mat2 Ji = detail::mde_jinv(xi);
    auto eval = [p1, Ji](double x) {
        const double z = x;
        if (z <= 0.0) return Ji * detail::mde_phi(1.0, p1.xi);
        return Ji * detail::mde_phi(std::exp(log_survival_std(z, p1.xi)), p1.xi);
    };
    InfluenceFunction psi1(IfKind::MDE, p1, eval, true, {}, Ji * detail::mde_phi(0.0 + 1e-300, xi));
    return rescale_if(psi1, p.beta);
}

inline Mat2 mde_as_var_closed_form(const GpdParams& p) {
    const double x = p.xi, b = p.beta;
    const double c = (3.0 + x) * (3.0 + x) / (125.0 * (5.0 + 2.0 * x) * (5.0 + x) * (5.0 + x));
    const double p9 = 2.0 * x + 9.0;
    const double v11 = 81.0 * (((((16.0 * x + 272.0) * x + 1694.0) * x + 4853.0) * x + 7276.0) * x + 6245.0) / (p9 * p9);
    const double v12 = -9.0 * b * ((((4.0 * x + 86.0) * x + 648.0) * x + 2623.0) * x + 4535.0) / p9;
    const double v22 = b * b * (((26.0 * x + 601.0) * x + 3154.0) * x + 5255.0);
    return c * Mat2{v11, v12, v12, v22};
}

struct MdeFsbpBound {
    double computed = 0.0;
    double printed_fraction = 4.0 / 9.0;
    double printed_percent = 0.36;
};

// Bound from the range of φ̃ over v ∈ [0,1] and ξ ∈ [xi_lo, xi_hi].
inline MdeFsbpBound mde_fsbp_bound(double xi_lo = 0.0, double xi_hi = 10.0, int nv = 2001, int nxi = 201) {
    double inf[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double sup[2] = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int j = 0; j < nxi; ++j) {
        const double xi = nxi == 1 ? xi_lo : xi_lo + (xi_hi - xi_lo) * j / (nxi - 1.0);
        for (int i = 0; i < nv; ++i) {
            const double v = std::max(1e-300, static_cast<double>(i) / (nv - 1.0));
            const Vec2 ph = detail::mde_phi(v, xi);
            for (int c = 0; c < 2; ++c) {
                inf[c] = std::min(inf[c], ph[c]);
                sup[c] = std::max(sup[c], ph[c]);
            }
        }
    }
    MdeFsbpBound out;
    out.computed = 1.0;
    for (int c = 0; c < 2; ++c) {
        const double span = sup[c] - inf[c];
        out.computed = std::min({out.computed, -inf[c] / span, sup[c] / span});
    }
    return out;
}

} // namespace gpdrobust
