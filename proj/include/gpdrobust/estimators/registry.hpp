#pragma once

#include <array>
#include <cctype>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "../errors.hpp"
#include "../estimate.hpp"
#include "../grid.hpp"
#include "../onestep.hpp"
#include "classic.hpp"
#include "start.hpp"

namespace gpdrobust {

enum class EstimatorId { MLE, MBRE, OMSE, RMXE, PE, MMed, MedkMAD, Hybr, SMLE, MDE };

inline constexpr std::array<EstimatorId, 10> all_estimators{
    EstimatorId::MLE, EstimatorId::MBRE, EstimatorId::OMSE, EstimatorId::RMXE, EstimatorId::PE,
    EstimatorId::MMed, EstimatorId::MedkMAD, EstimatorId::Hybr, EstimatorId::SMLE, EstimatorId::MDE};

inline std::string_view to_string(EstimatorId e) {
    switch (e) {
    case EstimatorId::MLE: return "MLE";
    case EstimatorId::MBRE: return "MBRE";
    case EstimatorId::OMSE: return "OMSE";
    case EstimatorId::RMXE: return "RMXE";
    case EstimatorId::PE: return "PE";
    case EstimatorId::MMed: return "MMed";
    case EstimatorId::MedkMAD: return "MedkMAD";
    case EstimatorId::Hybr: return "Hybr";
    case EstimatorId::SMLE: return "SMLE";
    case EstimatorId::MDE: return "MDE";
    }
    return "?";
}

inline EstimatorId parse_estimator(std::string_view s) {
    std::string low(s);
    for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (EstimatorId e : all_estimators) {
        std::string n(to_string(e));
        for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (n == low) return e;
    }
    throw invalid_parameter("unknown estimator '" + std::string(s) + "'");
}

// Estimators started from Hybr inherit its failures.
inline bool uses_hybr_start(EstimatorId e) {
    switch (e) {
    case EstimatorId::MLE:
    case EstimatorId::MBRE:
    case EstimatorId::OMSE:
    case EstimatorId::RMXE:
    case EstimatorId::SMLE:
    case EstimatorId::MDE: return true;
    default: return false;
    }
}

inline bool is_one_step(EstimatorId e) {
    return e == EstimatorId::MBRE || e == EstimatorId::OMSE || e == EstimatorId::RMXE;
}

// Everything needed to run any estimator on a sample.
struct EstimatorSuite {
    double omse_radius = 0.5;
    double pe_a = 2.0;
    double medkmad_k = 10.0;
    HybrConfig hybr_cfg;
    SmleConfig smle_cfg;
    // One-step ψ from grids when present, direct solves otherwise.
    std::shared_ptr<const InterpolationGrid> mbre_grid, omse_grid, rmxe_grid;

    OneStepPlan plan(EstimatorId e) const {
        std::shared_ptr<const InterpolationGrid> g;
        IfKind k = IfKind::OMSE;
        if (e == EstimatorId::MBRE) g = mbre_grid, k = IfKind::MBRE;
        else if (e == EstimatorId::OMSE) g = omse_grid, k = IfKind::OMSE;
        else if (e == EstimatorId::RMXE) g = rmxe_grid, k = IfKind::RMXE;
        else throw invalid_parameter("not a one-step estimator");
        if (g) {
            OneStepPlan p = OneStepPlan::from_grid(g);
            p.clamp_to_hull = true;
            return p;
        }
        return OneStepPlan::direct(k, k == IfKind::OMSE ? std::optional<double>(omse_radius) : std::nullopt);
    }

    EstimateResult start(std::span<const double> x) const { return hybr(x, hybr_cfg); }

    // Runs e; for Hybr-started estimators `hybr_fit` is reused when supplied.
    EstimateResult fit(EstimatorId e, std::span<const double> x,
                       const std::optional<EstimateResult>& hybr_fit = std::nullopt) const {
        auto st = [&] { return hybr_fit ? *hybr_fit : start(x); };
        try {
            switch (e) {
            case EstimatorId::PE: return pe(x, pe_a);
            case EstimatorId::MMed: return mmed(x, hybr_cfg.bracket);
            case EstimatorId::MedkMAD: return medkmad(x, medkmad_k, hybr_cfg.bracket);
            case EstimatorId::Hybr: return start(x);
            default: break;
            }
            const EstimateResult s0 = st();
            if (!s0.ok) return s0;
            switch (e) {
            case EstimatorId::MLE: return mle(x, s0.params);
            case EstimatorId::SMLE: return smle(x, smle_cfg, s0.params);
            case EstimatorId::MDE: return mde_cvm(x, s0.params);
            default: {
                OneStepPlan p = plan(e);
                p.start = [s0](std::span<const double>) { return s0; };
                return one_step(x, p);
            }
            }
        } catch (const domain_error&) {
            return EstimateResult::failure(FailureReason::NoRoot);
        } catch (const solver_error&) {
            return EstimateResult::failure(FailureReason::IterationLimit);
        } catch (const bracket_error&) {
            return EstimateResult::failure(FailureReason::NoRoot);
        }
    }

    // ψ of e at p, for asymptotic summaries; SMLE uses the skip rate at sample size n.
    InfluenceFunction influence(EstimatorId e, const GpdParams& p, std::size_t n = 1000) const {
        switch (e) {
        case EstimatorId::MLE: return mle_if(p);
        case EstimatorId::PE: return pe_if(p, pe_a);
        case EstimatorId::MMed: return mmed_if(p);
        case EstimatorId::MedkMAD:
        case EstimatorId::Hybr: return medkmad_if(p, medkmad_k);
        case EstimatorId::SMLE: return smle_if(p, smle_cfg.alpha(n));
        case EstimatorId::MDE: return mde_if(p);
        default: return plan_if(plan(e), p);
        }
    }
};

// Grid nodes covering the ξ range Hybr can return.
inline std::vector<double> start_range_xi_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 69; ++i) g.push_back(-0.45 + 0.05 * i); // up to 3.0
    for (double v : {3.25, 3.5, 4.0, 4.5, 5.0, 6.0, 7.0, 8.5, 10.0}) g.push_back(v);
    return g;
}

} // namespace gpdrobust
