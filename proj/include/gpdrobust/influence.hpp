#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpd.hpp"
#include "lagrange.hpp"
#include "linalg.hpp"
#include "quadrature.hpp"

namespace gpdrobust {

enum class IfKind { MLE, SMLE, MDE, PE, MMed, MedkMAD, MBRE, OMSE, RMXE, OBRE };

inline std::string_view to_string(IfKind k) {
    switch (k) {
    case IfKind::MLE: return "MLE";
    case IfKind::SMLE: return "SMLE";
    case IfKind::MDE: return "MDE";
    case IfKind::PE: return "PE";
    case IfKind::MMed: return "MMed";
    case IfKind::MedkMAD: return "MedkMAD";
    case IfKind::MBRE: return "MBRE";
    case IfKind::OMSE: return "OMSE";
    case IfKind::RMXE: return "RMXE";
    case IfKind::OBRE: return "OBRE";
    }
    return "?";
}

// n_β(x) = |d_β⁻¹ x|
struct WeightedNorm {
    double beta = 1.0;
    double operator()(const Vec2& x) const { return std::hypot(x[0], x[1] / beta); }
    // trace of d_β⁻¹ V d_β⁻¹, the variance part of the risk in this norm
    double trace(const Mat2& V) const { return V(0, 0) + V(1, 1) / (beta * beta); }
};

struct IfMetadata {
    std::optional<LagrangeTriple> triple;
    std::optional<double> radius;
    std::optional<double> skip_rate;
    std::optional<double> k;
    std::optional<double> a;
};

class InfluenceFunction {
public:
    using Eval = std::function<Vec2(double)>;

    InfluenceFunction(IfKind kind, GpdParams at, Eval eval, bool bounded, std::vector<double> breakpoints = {},
                      std::optional<Vec2> tail_limit = std::nullopt, IfMetadata meta = {})
        : kind_(kind), at_(at), eval_(std::move(eval)), bounded_(bounded), breaks_(std::move(breakpoints)),
          tail_(tail_limit), meta_(std::move(meta)) {
        std::sort(breaks_.begin(), breaks_.end());
    }

    Vec2 operator()(double x) const { return eval_(x); }

    IfKind kind() const { return kind_; }
    const GpdParams& at() const { return at_; }
    bool bounded() const { return bounded_; }
    // x-values where ψ jumps or kinks
    const std::vector<double>& breakpoints() const { return breaks_; }
    // ψ at the upper end of the support, when bounded
    const std::optional<Vec2>& tail_limit() const { return tail_; }
    const IfMetadata& metadata() const { return meta_; }
    WeightedNorm default_norm() const { return {at_.beta}; }

private:
    IfKind kind_;
    GpdParams at_;
    Eval eval_;
    bool bounded_;
    std::vector<double> breaks_;
    std::optional<Vec2> tail_;
    IfMetadata meta_;
};

// ψ_θ(x) = d_β ψ_θ₁(x/β): builds the IF at (ξ, β) from one at (ξ, 1).
inline InfluenceFunction rescale_if(const InfluenceFunction& psi1, double beta) {
    const GpdParams p1 = psi1.at();
    if (p1.beta != 1.0 || p1.mu != 0.0) throw invalid_parameter("rescale_if expects an IF at beta = 1, mu = 0");
    if (beta == 1.0) return psi1;
    const Mat2 d = d_beta(beta);
    auto eval = [psi1, d, beta](double x) { return d * psi1(x / beta); };
    std::vector<double> br;
    for (double x : psi1.breakpoints()) br.push_back(beta * x);
    std::optional<Vec2> tail;
    if (psi1.tail_limit()) tail = d * *psi1.tail_limit();
    IfMetadata meta = psi1.metadata();
    if (meta.triple) meta.triple = rescale_triple(*meta.triple, beta);
    return {psi1.kind(), GpdParams{p1.xi, beta, 0.0}, eval, psi1.bounded(), std::move(br), tail, meta};
}

struct IcResiduals {
    Vec2 mean;          // E ψ
    Mat2 standardization; // E ψΛᵀ − I
    double max_abs() const { return std::max(gpdrobust::max_abs(mean), gpdrobust::max_abs(standardization)); }
};

inline IcResiduals check_ic_conditions(const InfluenceFunction& psi, double tol = 1e-10) {
    const GpdParams& p = psi.at();
    auto g = [&](double x) {
        const Vec2 y = psi(x);
        const Vec2 s = scores(x, p);
        return VecN<6>{{y[0], y[1], y[0] * s[0], y[0] * s[1], y[1] * s[0], y[1] * s[1]}};
    };
    const auto r = expect(g, p, tol, psi.breakpoints());
    return {{r[0], r[1]}, Mat2{r[2] - 1.0, r[3], r[4], r[5] - 1.0}};
}

inline Mat2 as_var(const InfluenceFunction& psi, double tol = 1e-10) {
    auto g = [&](double x) {
        const Vec2 y = psi(x);
        return VecN<3>{{y[0] * y[0], y[0] * y[1], y[1] * y[1]}};
    };
    const auto r = expect(g, psi.at(), tol, psi.breakpoints());
    return {r[0], r[1], r[1], r[2]};
}

namespace detail {

// x-grid log-spaced in -log v, plus the threshold and breakpoints.
inline std::vector<double> ges_grid(const InfluenceFunction& psi, std::size_t n = 2048) {
    const GpdParams& p = psi.at();
    std::vector<double> xs;
    xs.reserve(n + 3 * psi.breakpoints().size() + 1);
    xs.push_back(p.mu);
    const double lt0 = std::log(1e-10), lt1 = std::log(70.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = std::exp(lt0 + (lt1 - lt0) * static_cast<double>(j) / static_cast<double>(n - 1));
        xs.push_back(x_of_v(std::exp(-t), p));
    }
    for (double b : psi.breakpoints()) {
        const double h = 1e-9 * std::max(std::abs(b), p.beta);
        for (double x : {b - h, b, b + h})
            if (in_support(x, p)) xs.push_back(x);
    }
    const double hi = upper_endpoint(p);
    xs.erase(std::remove_if(xs.begin(), xs.end(), [&](double x) { return !(x >= p.mu && x < hi); }), xs.end());
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

} // namespace detail

inline double ges(const InfluenceFunction& psi, const WeightedNorm& norm) {
    if (!psi.bounded()) return std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (double x : detail::ges_grid(psi)) s = std::max(s, norm(psi(x)));
    if (psi.tail_limit()) s = std::max(s, norm(*psi.tail_limit()));
    return s;
}
inline double ges(const InfluenceFunction& psi) { return ges(psi, psi.default_norm()); }

struct RiskSummary {
    Mat2 as_var;
    double trace = 0.0;  // variance part in the chosen norm
    double ges = 0.0;
    double radius = 0.0;
    double as_bias = 0.0;
    double as_mse = 0.0;
    std::optional<double> eff_id, eff_re, eff_ru;
};

inline double as_mse(double ges_value, double trace_var, double r) {
    if (r == 0.0) return trace_var;
    return r * r * ges_value * ges_value + trace_var;
}

inline RiskSummary risk_summary(const InfluenceFunction& psi, double r, const WeightedNorm& norm, double tol = 1e-10) {
    RiskSummary s;
    s.as_var = as_var(psi, tol);
    s.trace = norm.trace(s.as_var);
    s.ges = ges(psi, norm);
    s.radius = r;
    s.as_bias = r == 0.0 ? 0.0 : r * s.ges;
    s.as_mse = as_mse(s.ges, s.trace, r);
    return s;
}
inline RiskSummary risk_summary(const InfluenceFunction& psi, double r, double tol = 1e-10) {
    return risk_summary(psi, r, psi.default_norm(), tol);
}

inline double as_mse(const InfluenceFunction& psi, double r) { return risk_summary(psi, r).as_mse; }

// What an efficiency needs to know about the optimal procedures at θ.
struct EfficiencyReference {
    double trace_fisher_inverse = 0.0;  // in the same norm as the IF
    double mbre_ges = 0.0;
    std::function<std::optional<double>(double)> omse_as_mse;  // nullopt on solver failure
};

struct Efficiencies {
    double eff_id = 0.0;
    double eff_re = 0.0;
    double eff_ru = 0.0;
    std::vector<double> skipped_radii;
};

inline std::vector<double> default_radius_grid(std::size_t n = 40, double lo = 0.01, double hi = 10.0) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

inline Efficiencies efficiencies(double trace_var, double ges_value, double r, const std::vector<double>& r_grid,
                                 const EfficiencyReference& ref) {
    Efficiencies e;
    e.eff_id = std::min(1.0, ref.trace_fisher_inverse / trace_var);
    if (!std::isfinite(ges_value)) {
        e.eff_re = r == 0.0 ? e.eff_id : 0.0;
        e.eff_ru = 0.0;
        return e;
    }
    auto eff_at = [&](double rr) -> std::optional<double> {
        const auto opt = ref.omse_as_mse(rr);
        if (!opt) return std::nullopt;
        return std::min(1.0, *opt / as_mse(ges_value, trace_var, rr));
    };
    if (r == 0.0) {
        e.eff_re = e.eff_id;
    } else if (auto v = eff_at(r)) {
        e.eff_re = *v;
    } else {
        e.skipped_radii.push_back(r);
        e.eff_re = std::numeric_limits<double>::quiet_NaN();
    }
    const double bias_limit = std::min(1.0, (ref.mbre_ges / ges_value) * (ref.mbre_ges / ges_value));
    double ru = std::min(e.eff_id, bias_limit);
    for (double rr : r_grid) {
        if (auto v = eff_at(rr)) ru = std::min(ru, *v);
        else e.skipped_radii.push_back(rr);
    }
    e.eff_ru = ru;
    return e;
}

inline Efficiencies efficiencies(const InfluenceFunction& psi, double r, const std::vector<double>& r_grid,
                                 const EfficiencyReference& ref, double tol = 1e-10) {
    const RiskSummary s = risk_summary(psi, r, tol);
    return efficiencies(s.trace, s.ges, r, r_grid, ref);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Where the IF comes within frac of its GES.
inline std::vector<Interval> lf_region(const InfluenceFunction& psi, const WeightedNorm& norm, double frac = 1.0 - 1e-3) {
    std::vector<Interval> out;
    if (!psi.bounded()) return out;
    const double g = ges(psi, norm);
    const double level = frac * g;
    const auto xs = detail::ges_grid(psi);
    auto marked = [&](double x) { return norm(psi(x)) >= level; };
    auto refine = [&](double in, double outside) {
        for (int i = 0; i < 80; ++i) {
            const double m = 0.5 * (in + outside);
            if (m == in || m == outside) break;
            (marked(m) ? in : outside) = m;
        }
        return in;
    };
    const bool tail_marked = psi.tail_limit() && norm(*psi.tail_limit()) >= level;
    std::size_t i = 0;
    while (i < xs.size()) {
        if (!marked(xs[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < xs.size() && marked(xs[j + 1])) ++j;
        Interval iv;
        iv.lo = i == 0 ? xs[0] : refine(xs[i], xs[i - 1]);
        if (j + 1 == xs.size() && tail_marked) iv.hi = upper_endpoint(psi.at());
        else if (j + 1 == xs.size()) iv.hi = xs[j];
        else iv.hi = refine(xs[j], xs[j + 1]);
        out.push_back(iv);
        i = j + 1;
    }
    if (out.empty() && tail_marked) {
        const double hi = upper_endpoint(psi.at());
        out.push_back({xs.empty() ? hi : xs.back(), hi});
    }
    return out;
}
inline std::vector<Interval> lf_region(const InfluenceFunction& psi, double frac = 1.0 - 1e-3) {
    return lf_region(psi, psi.default_norm(), frac);
}

} // namespace gpdrobust
