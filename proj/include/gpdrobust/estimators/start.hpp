#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "../errors.hpp"
#include "../estimate.hpp"
#include "../gpd.hpp"
#include "../influence.hpp"
#include "../roots.hpp"
#include "../special.hpp"

namespace gpdrobust {

inline constexpr double xi_search_lo = -0.45;
inline constexpr double xi_search_hi = 10.0;
inline constexpr double xi_root_tol = 1e-10;

// Search interval for ξ in the MMed and MedkMAD root problems.
struct XiBracket {
    double lo = xi_search_lo;
    double hi = xi_search_hi;
};

// Quantile of GPD(ξ, 1) and its ξ-derivative.
inline double std_quantile(double alpha, double xi) {
    const double t = -std::log1p(-alpha);
    return t * special::expm1_ratio(xi * t);
}
inline double std_quantile_dxi(double alpha, double xi) {
    const double t = -std::log1p(-alpha);
    return t * t * std::exp(xi * t) * special::expm1_ratio2(-xi * t);
}

// m_ξ = (2^ξ − 1)/ξ
inline double std_median(double xi) { return std_quantile(0.5, xi); }
inline double std_median_dxi(double xi) { return std_quantile_dxi(0.5, xi); }

namespace detail {

inline double std_cdf(double z, double xi) {
    if (z <= 0.0) return 0.0;
    if (xi < 0.0 && 1.0 + xi * z <= 0.0) return 1.0;
    return -std::expm1(log_survival_std(z, xi));
}

// Root in ξ over the search interval, failing unless the endpoints differ in sign.
template <class F>
std::optional<RootResult> xi_root(F&& f, const XiBracket& br = {}) {
    if (!(br.lo < br.hi) || br.lo <= -0.5) throw invalid_parameter("xi bracket must satisfy -0.5 < lo < hi");
    const double flo = f(br.lo), fhi = f(br.hi);
    if (!std::isfinite(flo) || !std::isfinite(fhi)) return std::nullopt;
    if (flo == 0.0) return RootResult{br.lo, 0.0, 0, true};
    if (fhi == 0.0) return RootResult{br.hi, 0.0, 0, true};
    if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
    return brent_root(f, br.lo, br.hi, xi_root_tol);
}

// Builds a step IF at (ξ, 1) from its evaluator and rescales to β.
inline InfluenceFunction step_if(IfKind kind, const GpdParams& p, InfluenceFunction::Eval eval1,
                                 std::vector<double> breaks1, IfMetadata meta) {
    const GpdParams p1{p.xi, 1.0, 0.0};
    const double top = std::isfinite(upper_endpoint(p1))
                           ? upper_endpoint(p1) * (1.0 - 1e-12)
                           : x_of_v(1e-30, p1);
    const Vec2 tail = eval1(top);
    InfluenceFunction psi1(kind, p1, std::move(eval1), true, std::move(breaks1), tail, std::move(meta));
    if (p.mu != 0.0) throw invalid_parameter("influence functions assume mu = 0");
    return rescale_if(psi1, p.beta);
}

} // namespace detail

// ---------------------------------------------------------------- kMAD

struct KmadSpec {
    double k = 10.0;
};

// Smallest t with #{m − t ≤ x ≤ m + k t} ≥ n/2: the ⌈n/2⌉-th smallest of the
// per-point distances (m − x) or (x − m)/k.
inline double empirical_kmad(std::span<const double> x, double k) {
    if (x.size() < 2) throw invalid_parameter("kMAD needs at least two observations");
    if (!(k > 0.0)) throw invalid_parameter("kMAD needs k > 0");
    const double m = sample_median(x);
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] < m ? m - x[i] : (x[i] - m) / k;
    const std::size_t need = (x.size() + 1) / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(need - 1), d.end());
    return d[need - 1];
}

// Population kMAD: root M of F(m + kM) − F(m − M) = 1/2.
inline double population_kmad(const GpdParams& p, double k) {
    p.validate();
    const double m = std_median(p.xi);
    auto g = [&](double M) { return detail::std_cdf(m + k * M, p.xi) - detail::std_cdf(m - M, p.xi) - 0.5; };
    auto [lo, hi] = expand_upper(g, 0.0, m);
    return p.beta * brent_root(g, lo, hi, 1e-15).x;
}

// ---------------------------------------------------------------- PE

inline EstimateResult pe_from_quantiles(double q2, double q3, double a) {
    if (!(a > 1.0)) throw invalid_parameter("PE needs a > 1");
    if (!(q2 > 0.0) || !(q3 > q2) || q3 == 2.0 * q2) return EstimateResult::failure(FailureReason::DegenerateQuantiles);
    const double xi = std::log((q3 - q2) / q2) / std::log(a);
    const double beta = xi * q2 * q2 / (q3 - 2.0 * q2);
    if (!(beta > 0.0) || !std::isfinite(beta)) return EstimateResult::failure(FailureReason::NonPositiveScale);
    return EstimateResult::success({xi, beta, 0.0});
}

inline EstimateResult pe(std::span<const double> x, double a = 2.0) {
    if (x.size() < 4) return EstimateResult::failure(FailureReason::InvalidInput);
    const auto s = sorted_copy(x);
    return pe_from_quantiles(quantile_type1_sorted(s, 1.0 - 1.0 / a), quantile_type1_sorted(s, 1.0 - 1.0 / (a * a)), a);
}

inline InfluenceFunction pe_if(const GpdParams& p, double a = 2.0) {
    p.validate();
    const double xi = p.xi;
    const double al2 = 1.0 - 1.0 / a, al3 = 1.0 - 1.0 / (a * a);
    const double q2 = std_quantile(al2, xi), q3 = std_quantile(al3, xi);
    const GpdParams p1{xi, 1.0, 0.0};
    const double f2 = density(q2, p1), f3 = density(q3, p1);
    // rows: (Q2, Q3); columns: (ξ, β)
    const Mat2 J{std_quantile_dxi(al2, xi), q2, std_quantile_dxi(al3, xi), q3};
    const Mat2 Ji = inverse(J);
    auto eval = [=](double x) {
        const Vec2 iq{(al2 - (x <= q2 ? 1.0 : 0.0)) / f2, (al3 - (x <= q3 ? 1.0 : 0.0)) / f3};
        return Ji * iq;
    };
    IfMetadata meta;
    meta.a = a;
    return detail::step_if(IfKind::PE, p, eval, {q2, q3}, meta);
}

// min{π_ξ(a), 1/a²} with π_ξ(a) = (2a^ξ − 1)^(−1/ξ) − 1/a²
inline double pe_efsbp(double a, double xi) {
    if (!(a > 1.0)) throw invalid_parameter("PE needs a > 1");
    const double la = std::log(a);
    const double u = 2.0 * xi * la * special::expm1_ratio(xi * la);
    const double pi = std::exp(-2.0 * la * special::expm1_ratio(xi * la) * special::log1p_ratio(u)) - 1.0 / (a * a);
    return std::min(pi, 1.0 / (a * a));
}

// min{1/a², N⁰/n}, N⁰ = #{2Q̂₂ ≤ X ≤ Q̂₃}
inline double pe_fsbp(std::span<const double> x, double a = 2.0) {
    const auto s = sorted_copy(x);
    const double q2 = quantile_type1_sorted(s, 1.0 - 1.0 / a), q3 = quantile_type1_sorted(s, 1.0 - 1.0 / (a * a));
    const auto n0 = std::count_if(s.begin(), s.end(), [&](double v) { return v >= 2.0 * q2 && v <= q3; });
    return std::min(1.0 / (a * a), static_cast<double>(n0) / static_cast<double>(s.size()));
}

// ---------------------------------------------------------------- MMed

namespace detail {

// ξ-score of GPD(ξ, 1) as a function of L = log v; minimal at z = 1.
inline double shape_score_L(double L, double xi) {
    return scores_from_log_survival(L, GpdParams{xi, 1.0, 0.0})[0];
}
inline double z_of_L(double L, double xi) { return -L * special::expm1_ratio(-xi * L); }

struct ScoreLevelSet {
    double q1 = 0.0;  // in x units of the evaluation model
    double q2 = 0.0;
    double prob = 0.0;
};

// {x : λ(x) ≤ c} = [q1, q2] for λ the ξ-score of `eval` at x/β.
inline ScoreLevelSet score_level_set(double c, const GpdParams& eval, const GpdParams& truth) {
    const double xi = eval.xi;
    const double Lstar = log_survival_std(1.0, xi);
    const double lmin = shape_score_L(Lstar, xi);
    ScoreLevelSet out;
    if (c <= lmin) {
        out.q1 = out.q2 = eval.beta;
        return out;
    }
    auto h = [&](double L) { return shape_score_L(L, xi) - c; };
    double L1 = 0.0;
    if (c < 0.0) L1 = brent_root(h, Lstar, 0.0, 1e-16).x;
    double lo = 2.0 * Lstar - 1.0;
    int guard = 0;
    while (h(lo) < 0.0) {
        lo *= 2.0;
        if (++guard > 200) throw bracket_error("score level set unbounded");
    }
    const double L2 = brent_root(h, lo, Lstar, 1e-15 * std::abs(lo)).x;
    out.q1 = eval.beta * z_of_L(L1, xi);
    out.q2 = eval.beta * z_of_L(L2, xi);
    out.prob = cdf(out.q2, truth) - cdf(out.q1, truth);
    return out;
}

} // namespace detail

// Median of λ(X) for λ the ξ-score of `eval` (at x/β) and X ~ truth.
inline double score_median(const GpdParams& eval, const GpdParams& truth) {
    eval.validate();
    truth.validate();
    const double xi = eval.xi;
    const double lmin = detail::shape_score_L(log_survival_std(1.0, xi), xi);
    auto g = [&](double c) { return detail::score_level_set(c, eval, truth).prob - 0.5; };
    double hi = std::max(1.0, std::abs(lmin));
    int guard = 0;
    while (g(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 200) throw bracket_error("score median not bracketed");
    }
    return brent_root(g, lmin, hi, 1e-15 * std::max(1.0, hi)).x;
}

// M(ξ): population median of the ξ-score under GPD(ξ, 1); memoized.
inline double mmed_level(double xi) {
    static std::mutex mu;
    static std::map<double, double> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(xi);
        if (it != cache.end()) return it->second;
    }
    const GpdParams p{xi, 1.0, 0.0};
    const double v = score_median(p, p);
    std::lock_guard<std::mutex> lock(mu);
    if (cache.size() > 100000) cache.clear();
    cache.emplace(xi, v);
    return v;
}

struct MmedLevelSet {
    double M = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
};

// Level set {x : Λ_ξ(x) ≤ M(ξ)} at (ξ, 1).
inline MmedLevelSet mmed_level_set(double xi) {
    const GpdParams p{xi, 1.0, 0.0};
    const double M = mmed_level(xi);
    const auto ls = detail::score_level_set(M, p, p);
    return {M, ls.q1, ls.q2};
}

namespace detail {

inline double shape_score_scaled(double x, double xi, double beta) {
    const double z = x / beta;
    if (z < 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (xi < 0.0 && 1.0 + xi * z <= 0.0) return std::numeric_limits<double>::infinity();
    return shape_score_L(log_survival_std(z, xi), xi);
}

template <class Balance>
EstimateResult mmed_solve(double med, Balance&& balance, const XiBracket& br) {
    if (!(med > 0.0)) return EstimateResult::failure(FailureReason::DegenerateQuantiles);
    auto clamped = [&](double xi) {
        const double v = balance(xi);
        if (std::isnan(v)) return v;
        return std::clamp(v, -1e300, 1e300);
    };
    const auto root = xi_root(clamped, br);
    if (!root) return EstimateResult::failure(FailureReason::NoRoot);
    Diagnostics d;
    d.iterations = root->iterations;
    return EstimateResult::success({root->x, med / std_median(root->x), 0.0}, d);
}

} // namespace detail

inline EstimateResult mmed(std::span<const double> x, const XiBracket& br = {}) {
    if (x.size() < 4) return EstimateResult::failure(FailureReason::InvalidInput);
    const double med = sample_median(x);
    std::vector<double> buf(x.size());
    auto balance = [&](double xi) {
        const double beta = med / std_median(xi);
        for (std::size_t i = 0; i < x.size(); ++i) buf[i] = detail::shape_score_scaled(x[i], xi, beta);
        return median_sorted(sorted_copy(buf)) - mmed_level(xi);
    };
    return detail::mmed_solve(med, balance, br);
}

// MMed equations with the population functionals of `truth` in place of sample medians.
inline EstimateResult mmed_population(const GpdParams& truth, const XiBracket& br = {}) {
    const double med = median(truth);
    auto balance = [&](double xi) {
        return score_median({xi, med / std_median(xi), 0.0}, truth) - mmed_level(xi);
    };
    return detail::mmed_solve(med, balance, br);
}

inline InfluenceFunction mmed_if(const GpdParams& p) {
    p.validate();
    const double xi = p.xi;
    const GpdParams p1{xi, 1.0, 0.0};
    const double m = std_median(xi);
    const double fm = density(m, p1);
    const MmedLevelSet ls = mmed_level_set(xi);
    auto dscore = [&](double x) { return (x - 1.0) / ((1.0 + xi * x) * (1.0 + xi * x)); };
    const double flam = density(ls.q1, p1) / std::abs(dscore(ls.q1)) + density(ls.q2, p1) / std::abs(dscore(ls.q2));
    const double h = 1e-5;
    auto smed = [&](double e_xi, double e_beta) { return score_median({e_xi, e_beta, 0.0}, p1); };
    const double dM = (mmed_level(xi + h) - mmed_level(xi - h)) / (2.0 * h);
    // Jacobian of (med(X) − β m_ξ, med λ_θ(X) − M(ξ)) in (ξ, β)
    const Mat2 J{-std_median_dxi(xi), -m,
                 (smed(xi + h, 1.0) - smed(xi - h, 1.0)) / (2.0 * h) - dM,
                 (smed(xi, 1.0 + h) - smed(xi, 1.0 - h)) / (2.0 * h)};
    const Mat2 Ji = inverse(J);
    const double q1 = ls.q1, q2 = ls.q2;
    auto eval = [=](double x) {
        const Vec2 g{(0.5 - (x <= m ? 1.0 : 0.0)) / fm, (0.5 - (x >= q1 && x <= q2 ? 1.0 : 0.0)) / flam};
        return -(Ji * g);
    };
    return detail::step_if(IfKind::MMed, p, eval, {q1, m, q2}, {});
}

// ---------------------------------------------------------------- MedkMAD

// Solves median = β m_ξ and kMAD equation for given (m, M).
inline EstimateResult medkmad_from_functionals(double m, double M, double k, const XiBracket& br = {}) {
    if (!(m > 0.0) || !(M > 0.0)) return EstimateResult::failure(FailureReason::DegenerateQuantiles);
    const double rho = M / m;
    auto g = [&](double xi) {
        const double mx = std_median(xi);
        return 0.5 - detail::std_cdf(mx * (1.0 + k * rho), xi) + detail::std_cdf(mx * (1.0 - rho), xi);
    };
    const auto root = detail::xi_root(g, br);
    Diagnostics d;
    d.k_used = k;
    d.attempts = 1;
    if (!root) return EstimateResult::failure(FailureReason::NoRoot, d);
    d.iterations = root->iterations;
    return EstimateResult::success({root->x, m / std_median(root->x), 0.0}, d);
}

inline EstimateResult medkmad(std::span<const double> x, double k = 10.0, const XiBracket& br = {}) {
    if (x.size() < 4 || !(k > 0.0)) return EstimateResult::failure(FailureReason::InvalidInput);
    const double m = sample_median(x);
    const double M = empirical_kmad(x, k);
    if (M == 0.0) {
        Diagnostics d;
        d.k_used = k;
        d.attempts = 1;
        return EstimateResult::failure(FailureReason::DegenerateQuantiles, d);
    }
    return medkmad_from_functionals(m, M, k, br);
}

inline InfluenceFunction medkmad_if(const GpdParams& p, double k = 10.0) {
    p.validate();
    const double xi = p.xi;
    const GpdParams p1{xi, 1.0, 0.0};
    const double m = std_median(xi);
    const double M = population_kmad(p1, k);
    const double fm = density(m, p1);
    const double fp = density(m + k * M, p1);
    const double fn = m - M > 0.0 ? density(m - M, p1) : 0.0;
    const double h = 1e-5;
    const double dM = (population_kmad({xi + h, 1.0, 0.0}, k) - population_kmad({xi - h, 1.0, 0.0}, k)) / (2.0 * h);
    // rows: (kMAD, median); columns: (ξ, β)
    const Mat2 J{dM, M, std_median_dxi(xi), m};
    const Mat2 Ji = inverse(J);
    const double lo = m - M, hi = m + k * M;
    auto eval = [=](double x) {
        const double im = (0.5 - (x <= m ? 1.0 : 0.0)) / fm;
        const double iM = (0.5 - (x >= lo && x <= hi ? 1.0 : 0.0) - (fp - fn) * im) / (k * fp + fn);
        return Ji * Vec2{iM, im};
    };
    IfMetadata meta;
    meta.k = k;
    std::vector<double> br{m, hi};
    if (lo > 0.0) br.push_back(lo);
    return detail::step_if(IfKind::MedkMAD, p, eval, br, meta);
}

struct BreakdownValue {
    double value = 0.0;
    bool partial = false;
};

// min{N′, N″}/n; without q̌_k only the N′ branch is available.
inline BreakdownValue medkmad_fsbp(std::span<const double> x, double k, std::optional<double> q_check = std::nullopt) {
    const double m = sample_median(x);
    const double n = static_cast<double>(x.size());
    const auto n1 = std::count_if(x.begin(), x.end(), [&](double v) { return v > m && v <= (k + 1.0) * m; });
    if (!q_check) return {static_cast<double>(n1) / n, true};
    const double q = *q_check;
    const auto inside = std::count_if(x.begin(), x.end(), [&](double v) { return v >= (1.0 - q) * m && v <= (k * q + 1.0) * m; });
    const double n2 = std::ceil(n / 2.0) - static_cast<double>(inside);
    return {std::min(static_cast<double>(n1), n2) / n, false};
}

inline BreakdownValue medkmad_efsbp(const GpdParams& p, double k, std::optional<double> q_check = std::nullopt) {
    const double m = median(p);
    const double first = cdf((k + 1.0) * m, p) - 0.5;
    if (!q_check) return {first, true};
    const double q = *q_check;
    const double second = cdf((k * q + 1.0) * m, p) - cdf((1.0 - q) * m, p) - 0.5;
    return {std::min(first, second), false};
}

// ---------------------------------------------------------------- Hybr

struct HybrConfig {
    double k_first = 10.0;
    double k_start = 3.23;
    double k_factor = 3.0;
    int max_attempts = 20;
    XiBracket bracket;
};

inline EstimateResult hybr(std::span<const double> x, const HybrConfig& cfg = {}) {
    EstimateResult r = medkmad(x, cfg.k_first, cfg.bracket);
    int attempts = 1;
    double k = cfg.k_start;
    for (int i = 0; !r.ok && i < cfg.max_attempts; ++i, k *= cfg.k_factor) {
        r = medkmad(x, k, cfg.bracket);
        ++attempts;
    }
    r.diagnostics.attempts = attempts;
    return r;
}

} // namespace gpdrobust
