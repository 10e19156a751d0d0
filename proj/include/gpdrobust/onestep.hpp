#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>

#include "errors.hpp"
#include "estimate.hpp"
#include "estimators/start.hpp"
#include "grid.hpp"
#include "influence.hpp"
#include "optimal.hpp"

namespace gpdrobust {

enum class IfSource { DirectSolve, Grid };

struct OneStepPlan {
    using Start = std::function<EstimateResult(std::span<const double>)>;

    Start start = [](std::span<const double> x) { return hybr(x); };
    IfSource source = IfSource::DirectSolve;
    IfKind kind = IfKind::OMSE; // MBRE, OMSE or RMXE
    std::optional<double> radius; // OMSE
    std::shared_ptr<const InterpolationGrid> grid;
    // Grid source: evaluate ψ at the nearest hull point when ξ⁰ falls outside.
    bool clamp_to_hull = false;
    SolverSettings solver;
    InterpolationSettings interp;

    static OneStepPlan direct(IfKind k, std::optional<double> r = std::nullopt) {
        OneStepPlan p;
        p.kind = k;
        p.radius = r;
        return p;
    }
    static OneStepPlan from_grid(std::shared_ptr<const InterpolationGrid> g) {
        OneStepPlan p;
        p.source = IfSource::Grid;
        p.kind = g->kind;
        p.radius = g->radius;
        p.grid = std::move(g);
        return p;
    }
    void validate() const;
};

inline void OneStepPlan::validate() const {
    if (kind != IfKind::MBRE && kind != IfKind::OMSE && kind != IfKind::RMXE)
        throw invalid_parameter("one-step kind must be MBRE, OMSE or RMXE");
    if (kind == IfKind::OMSE && source == IfSource::DirectSolve && !(radius && *radius > 0.0))
        throw invalid_parameter("OMSE one-step needs a radius");
    if (source == IfSource::Grid) {
        if (!grid) throw invalid_parameter("grid source without a grid");
        if (grid->kind != kind) throw invalid_parameter("grid kind does not match the plan");
    }
    if (!start) throw invalid_parameter("plan has no starting estimator");
}

// The plan's ψ at p: solved at (ξ, 1) and rescaled, or interpolated from the grid.
inline InfluenceFunction plan_if(const OneStepPlan& plan, const GpdParams& p) {
    plan.validate();
    if (plan.source == IfSource::Grid) {
        const auto& g = *plan.grid;
        GpdParams q = p;
        if (plan.clamp_to_hull) q.xi = std::clamp(q.xi, g.xi.front(), g.xi.back());
        return interpolate_if(g, q, plan.interp);
    }
    const GpdParams p1{p.xi, 1.0, 0.0};
    switch (plan.kind) {
    case IfKind::MBRE: return rescale_if(solve_mbre(p1, plan.solver).psi, p.beta);
    case IfKind::OMSE: return rescale_if(solve_omse(p1, *plan.radius, plan.solver).psi, p.beta);
    default: return rescale_if(solve_rmxe(p1, plan.solver).psi, p.beta);
    }
}

// ψ(x), continued by its tail limit past a finite upper endpoint.
inline Vec2 eval_extended(const InfluenceFunction& psi, double x) {
    const GpdParams& p = psi.at();
    if (x <= p.mu) return psi(p.mu);
    if (!in_support(x, p)) {
        if (psi.tail_limit()) return *psi.tail_limit();
        throw domain_error("observation beyond the upper endpoint of the starting estimate");
    }
    return psi(x);
}

// ξ̂ = ξ⁰ + mean ψ₁, β̂ = β⁰·exp(mean ψ₂ / β⁰).
inline EstimateResult one_step_from(std::span<const double> x, const GpdParams& start, const InfluenceFunction& psi) {
    Vec2 m;
    for (double v : x) m += eval_extended(psi, v);
    m = m / static_cast<double>(x.size());
    return EstimateResult::success({start.xi + m[0], start.beta * std::exp(m[1] / start.beta), 0.0});
}

inline EstimateResult one_step(std::span<const double> x, const OneStepPlan& plan) {
    plan.validate();
    const EstimateResult s = plan.start(x);
    if (!s.ok) return s;
    try {
        const InfluenceFunction psi = plan_if(plan, s.params);
        EstimateResult r = one_step_from(x, s.params, psi);
        r.diagnostics = s.diagnostics;
        return r;
    } catch (const regularity_error&) {
        return EstimateResult::failure(FailureReason::StartFailed, s.diagnostics);
    } catch (const domain_error&) {
        return EstimateResult::failure(FailureReason::StartFailed, s.diagnostics);
    } catch (const solver_error&) {
        return EstimateResult::failure(FailureReason::IterationLimit, s.diagnostics);
    }
}

// The one-step inherits the risks of its ψ.
inline RiskSummary one_step_asymptotics(const OneStepPlan& plan, const GpdParams& p, double r = 0.5) {
    const InfluenceFunction psi = plan_if(plan, p);
    return risk_summary(psi, r);
}

} // namespace gpdrobust
