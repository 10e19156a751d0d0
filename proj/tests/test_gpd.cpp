#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gpdrobust/gpd.hpp"
#include "gpdrobust/quadrature.hpp"

using namespace gpdrobust;

namespace {

// Plain closed forms, written out independently of the library.
double ref_density(double x, double xi, double beta) {
    return std::pow(1.0 + xi * x / beta, -1.0 / xi - 1.0) / beta;
}
double ref_log_density(double x, double xi, double beta) { return std::log(ref_density(x, xi, beta)); }

// midpoint rule in u = F(x), enough points for 1e-4 on the Fisher entries
Mat2 midpoint_fisher(double xi, double beta, int n) {
    const GpdParams p{xi, beta, 0.0};
    double s00 = 0, s01 = 0, s11 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) / n;
        const double x = beta / xi * (std::pow(1.0 - u, -xi) - 1.0);
        const double h = 1e-5;
        const double dxi = (ref_log_density(x, xi + h, beta) - ref_log_density(x, xi - h, beta)) / (2 * h);
        const double db = (ref_log_density(x, xi, beta + h) - ref_log_density(x, xi, beta - h)) / (2 * h);
        s00 += dxi * dxi;
        s01 += dxi * db;
        s11 += db * db;
    }
    (void)p;
    return Mat2{s00 / n, s01 / n, s01 / n, s11 / n};
}

} // namespace

TEST(Density, AtThresholdIsOneOverBeta) {
    EXPECT_DOUBLE_EQ(density(0.0, {0.7, 1.0, 0.0}), 1.0);
    EXPECT_DOUBLE_EQ(density(0.0, {0.7, 2.0, 0.0}), 0.5);
}

TEST(Density, ClosedFormAtOne) {
    EXPECT_NEAR(density(1.0, {0.7, 1.0, 0.0}), std::pow(1.7, -1.0 / 0.7 - 1.0), 1e-14);
    EXPECT_NEAR(density(1.0, {0.7, 1.0, 0.0}), 0.27564, 1e-5);
}

TEST(Density, ExponentialLimit) {
    for (double x : {0.1, 1.0, 5.0}) EXPECT_NEAR(density(x, {0.0, 2.0, 0.0}), 0.5 * std::exp(-x / 2.0), 1e-15);
}

TEST(Density, IntegratesToOne) {
    for (double xi : {-0.3, 0.0, 0.7, 3.0})
        EXPECT_NEAR(expect([](double) { return 1.0; }, GpdParams{xi, 1.5, 0.0}), 1.0, 1e-12);
}

TEST(Cdf, EdgesAndRoundTrip) {
    const GpdParams p{0.7, 1.3, 0.5};
    EXPECT_EQ(cdf(p.mu, p), 0.0);
    EXPECT_NEAR(cdf(1e300, {0.7, 1.0, 0.0}), 1.0, 1e-12);
    EXPECT_NEAR(cdf(quantile(0.5, p), p), 0.5, 1e-14);
    EXPECT_EQ(cdf(10.0, {-0.5, 1.0, 0.0}), 1.0); // beyond the endpoint 2
}

TEST(Quantile, ClosedForms) {
    EXPECT_NEAR(quantile(0.5, {0.7, 1.0, 0.0}), (std::pow(2.0, 0.7) - 1.0) / 0.7, 1e-14);
    EXPECT_NEAR(quantile(0.5, {0.7, 1.0, 0.0}), 0.8921, 1e-4);
    EXPECT_NEAR(quantile(0.75, {0.7, 1.0, 0.0}), (std::pow(4.0, 0.7) - 1.0) / 0.7, 1e-14);
    EXPECT_EQ(quantile(0.0, {0.7, 1.0, 3.0}), 3.0);
    EXPECT_NEAR(quantile(0.5, {0.0, 1.0, 0.0}), std::log(2.0), 1e-15);
    EXPECT_THROW(quantile(1.0, {0.7, 1.0, 0.0}), domain_error);
    EXPECT_DOUBLE_EQ(quantile(1.0, {-0.5, 1.0, 0.0}), 2.0);
}

TEST(Sample, EmptyAndDeterministic) {
    EXPECT_TRUE(sample(0, {0.7, 1.0, 0.0}, 1).empty());
    const auto a = sample(500, {0.7, 1.0, 0.0}, 42);
    const auto b = sample(500, {0.7, 1.0, 0.0}, 42);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, sample(500, {0.7, 1.0, 0.0}, 43));
}

TEST(Sample, KolmogorovSmirnov) {
    const GpdParams p{0.7, 1.0, 0.0};
    auto x = sample(100000, p, 3);
    std::sort(x.begin(), x.end());
    double d = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = 1.0 - std::pow(1.0 + 0.7 * x[i], -1.0 / 0.7);
        d = std::max({d, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
    }
    EXPECT_LT(d, 0.01);
}

TEST(Scores, AtThreshold) {
    const Vec2 s1 = scores(0.0, {0.7, 1.0, 0.0});
    EXPECT_NEAR(s1[0], 0.0, 1e-15);
    EXPECT_NEAR(s1[1], -1.0, 1e-15);
    const Vec2 s2 = scores(0.0, {0.7, 2.0, 0.0});
    EXPECT_NEAR(s2[1], -0.5, 1e-15);
}

TEST(Scores, MatchFiniteDifferences) {
    for (double xi : {0.2, 0.7, 2.0})
        for (double x : {0.05, 0.9, 4.0, 80.0}) {
            const double beta = 1.7, h = 1e-6;
            const Vec2 s = scores(x, {xi, beta, 0.0});
            const double dxi = (ref_log_density(x, xi + h, beta) - ref_log_density(x, xi - h, beta)) / (2 * h);
            const double db = (ref_log_density(x, xi, beta + h) - ref_log_density(x, xi, beta - h)) / (2 * h);
            EXPECT_NEAR(s[0], dxi, 1e-6 * std::max(1.0, std::abs(dxi)));
            EXPECT_NEAR(s[1], db, 1e-6 * std::max(1.0, std::abs(db)));
        }
}

TEST(Scores, ContinuousThroughXiZero) {
    for (double x : {0.3, 2.0, 10.0}) {
        const Vec2 a = scores(x, {-1e-9, 1.0, 0.0}), b = scores(x, {0.0, 1.0, 0.0}), c = scores(x, {1e-9, 1.0, 0.0});
        EXPECT_NEAR(a[0], b[0], 1e-6);
        EXPECT_NEAR(c[0], b[0], 1e-6);
        EXPECT_NEAR(b[0], 0.5 * x * x - x, 1e-12); // ξ = 0: x²/2 − x
    }
}

TEST(Scores, MeanZero) {
    for (double xi : {-0.3, 0.0, 0.7, 2.5}) {
        const GpdParams p{xi, 1.0, 0.0};
        const Vec2 m = expect([&](double x) { return scores(x, p); }, p, 1e-12);
        EXPECT_LT(max_abs(m), 1e-8) << "xi=" << xi;
    }
}

TEST(Scores, OutsideSupportThrows) {
    EXPECT_THROW(scores(-1.0, {0.7, 1.0, 0.0}), domain_error);
    EXPECT_THROW(scores(3.0, {-0.5, 1.0, 0.0}), domain_error);
}

TEST(Fisher, ClosedFormValues) {
    const Mat2 I = fisher_info({0.7, 1.0, 0.0});
    EXPECT_NEAR(I(0, 0), 0.4902, 1e-4);
    EXPECT_NEAR(I(0, 1), 0.2451, 1e-4);
    EXPECT_NEAR(I(1, 1), 0.4167, 1e-4);
}

TEST(Fisher, InverseTraceTable) { EXPECT_NEAR(trace(fisher_info_inverse({0.7, 1.0, 0.0})), 6.29, 1e-3); }

TEST(Fisher, InverseIsInverse) {
    for (double xi : {-0.4, 0.0, 0.7, 4.0}) {
        const GpdParams p{xi, 2.3, 0.0};
        EXPECT_LT(max_abs(fisher_info(p) * fisher_info_inverse(p) - Mat2::identity()), 1e-12);
    }
}

TEST(Fisher, ScaleRelation) {
    const Mat2 di = d_beta(1.0 / 3.0);
    EXPECT_LT(max_abs(fisher_info({0.7, 3.0, 0.0}) - di * fisher_info({0.7, 1.0, 0.0}) * di), 1e-12);
}

TEST(Fisher, QuadratureMatchesClosedForm) {
    for (double xi : {0.0, 0.7, 2.0}) {
        const GpdParams p{xi, 1.0, 0.0};
        const auto m = expect([&](double x) {
            const Vec2 s = scores(x, p);
            return VecN<3>{{s[0] * s[0], s[0] * s[1], s[1] * s[1]}};
        }, p, 1e-12);
        const Mat2 I = fisher_info(p);
        EXPECT_NEAR(m[0], I(0, 0), 1e-9);
        EXPECT_NEAR(m[1], I(0, 1), 1e-9);
        EXPECT_NEAR(m[2], I(1, 1), 1e-9);
    }
}

TEST(Fisher, MidpointOracle) {
    const Mat2 I = fisher_info({0.7, 1.0, 0.0});
    const Mat2 M = midpoint_fisher(0.7, 1.0, 400000);
    EXPECT_LT(max_abs(I - M), 2e-3);
}

TEST(Fisher, IrregularBelowMinusHalf) {
    EXPECT_THROW(fisher_info({-0.5, 1.0, 0.0}), regularity_error);
    EXPECT_THROW(fisher_info_inverse({-0.7, 1.0, 0.0}), regularity_error);
}

TEST(Params, LogRoundTripAndValidation) {
    const GpdParams p{0.7, 2.5, 0.0};
    const GpdParams q = from_log(to_log(p));
    EXPECT_NEAR(q.beta, p.beta, 1e-15);
    EXPECT_EQ(q.xi, p.xi);
    EXPECT_THROW((GpdParams{0.7, -1.0, 0.0}).validate(), invalid_parameter);
    EXPECT_THROW((GpdParams{NAN, 1.0, 0.0}).validate(), invalid_parameter);
}

TEST(Quadrature, IndicatorIntegral) {
    const GpdParams p{0.7, 1.0, 0.0};
    const double q = quantile(0.3, p);
    const std::vector<double> br{q};
    EXPECT_NEAR(expect([&](double x) { return x <= q ? 1.0 : 0.0; }, p, 1e-12, br), 0.3, 1e-12);
}

TEST(Quadrature, MeanOfHeavyTail) {
    // E X = β/(1−ξ) for ξ < 1
    const GpdParams p{0.45, 2.0, 0.0};
    EXPECT_NEAR(expect([](double x) { return x; }, p, 1e-10), 2.0 / 0.55, 1e-6);
}
