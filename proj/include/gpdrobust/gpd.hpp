#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "special.hpp"

namespace gpdrobust {

struct GpdParams {
    double xi = 0.0;
    double beta = 1.0;
    double mu = 0.0;

    void validate() const {
        if (!std::isfinite(xi)) throw invalid_parameter("xi must be finite");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw invalid_parameter("beta must be positive");
        if (!std::isfinite(mu)) throw invalid_parameter("mu must be finite");
    }
    friend bool operator==(const GpdParams&, const GpdParams&) = default;
};

struct LogGpdParams {
    double xi = 0.0;
    double log_beta = 0.0;
};

inline LogGpdParams to_log(const GpdParams& p) { return {p.xi, std::log(p.beta)}; }
inline GpdParams from_log(const LogGpdParams& q, double mu = 0.0) { return {q.xi, std::exp(q.log_beta), mu}; }

// Λ_θ(x): [0] derivative in ξ, [1] derivative in β.
using ScoreVec = Vec2;

inline double upper_endpoint(const GpdParams& p) {
    return p.xi < 0.0 ? p.mu - p.beta / p.xi : std::numeric_limits<double>::infinity();
}

inline bool in_support(double x, const GpdParams& p) {
    return x >= p.mu && x <= upper_endpoint(p);
}

// log of v = (1 + ξz)^(-1/ξ), the survival probability.
inline double log_survival_std(double z, double xi) {
    return -z * special::log1p_ratio(xi * z);
}

// x with survival probability v: inverse of the v-substitution.
inline double x_of_v(double v, const GpdParams& p) {
    const double t = -std::log(v);
    return p.mu + p.beta * t * special::expm1_ratio(p.xi * t);
}

inline double density(double x, const GpdParams& p) {
    p.validate();
    if (x < p.mu) return 0.0;
    const double z = (x - p.mu) / p.beta;
    const double s = 1.0 + p.xi * z;
    if (p.xi < 0.0 && s <= 0.0) {
        if (s < 0.0) return 0.0;
        if (p.xi > -1.0) return 0.0;
        return p.xi == -1.0 ? 1.0 / p.beta : std::numeric_limits<double>::infinity();
    }
    return std::exp((1.0 + p.xi) * log_survival_std(z, p.xi)) / p.beta;
}

inline double log_density(double x, const GpdParams& p) {
    return std::log(density(x, p));
}

inline double cdf(double x, const GpdParams& p) {
    p.validate();
    if (x <= p.mu) return 0.0;
    const double z = (x - p.mu) / p.beta;
    if (p.xi < 0.0 && 1.0 + p.xi * z <= 0.0) return 1.0;
    return -std::expm1(log_survival_std(z, p.xi));
}

inline double survival(double x, const GpdParams& p) { return 1.0 - cdf(x, p); }

inline double quantile(double q, const GpdParams& p) {
    p.validate();
    if (q == 1.0) {
        if (p.xi < 0.0) return upper_endpoint(p);
        throw domain_error("quantile(1) is infinite for xi >= 0");
    }
    if (!(q >= 0.0 && q < 1.0)) throw domain_error("quantile level outside [0,1)");
    const double t = -std::log1p(-q);
    return p.mu + p.beta * t * special::expm1_ratio(p.xi * t);
}

inline double median(const GpdParams& p) { return quantile(0.5, p); }

// Draws by inverse cdf; the uniform is built from the top 53 bits so output
// does not depend on the standard library's distribution implementation.
inline std::vector<double> sample(std::size_t n, const GpdParams& p, std::uint64_t seed) {
    p.validate();
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) {
        const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
        x = x_of_v(1.0 - u, p);
    }
    return out;
}

// Scores from L = log v; stable through ξ = 0.
inline ScoreVec scores_from_log_survival(double L, const GpdParams& p) {
    const double t = p.xi * L;
    const double g1 = special::expm1_ratio(t);
    const double g2 = special::expm1_ratio2(t);
    return {L * L * g2 + L * g1, (-1.0 - (p.xi + 1.0) * L * g1) / p.beta};
}

inline ScoreVec scores(double x, const GpdParams& p) {
    p.validate();
    if (x < p.mu || (p.xi < 0.0 && x >= upper_endpoint(p)))
        throw domain_error("scores: x outside the support");
    const double z = (x - p.mu) / p.beta;
    return scores_from_log_survival(log_survival_std(z, p.xi), p);
}

inline Mat2 fisher_info(const GpdParams& p) {
    p.validate();
    const double xi = p.xi, b = p.beta;
    if (!(2.0 * xi + 1.0 > 0.0)) throw regularity_error("Fisher information requires 2xi+1 > 0");
    const double c = 1.0 / ((2.0 * xi + 1.0) * (xi + 1.0));
    return c * Mat2{2.0, 1.0 / b, 1.0 / b, (xi + 1.0) / (b * b)};
}

inline Mat2 fisher_info_inverse(const GpdParams& p) {
    p.validate();
    const double xi = p.xi, b = p.beta;
    if (!(2.0 * xi + 1.0 > 0.0)) throw regularity_error("Fisher information requires 2xi+1 > 0");
    return (1.0 + xi) * Mat2{xi + 1.0, -b, -b, 2.0 * b * b};
}

// Scores in (ξ, log β).
inline Vec2 log_scores(double x, const GpdParams& p) { return d_beta(p.beta) * scores(x, p); }

inline Mat2 log_fisher_info(const GpdParams& p) {
    const Mat2 d = d_beta(p.beta);
    return d * fisher_info(p) * d;
}

} // namespace gpdrobust
