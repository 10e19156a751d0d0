#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gpdrobust/estimators/classic.hpp"
#include "gpdrobust/simulation.hpp"

using namespace gpdrobust;

namespace {

const GpdParams p07{0.7, 1.0, 0.0};

// Sample placed exactly at model quantiles (2i − 1)/(2n).
std::vector<double> quantile_sample(std::size_t n, const GpdParams& p) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = quantile((2.0 * i + 1.0) / (2.0 * n), p);
    return x;
}

} // namespace

TEST(Mle, ConsistentAtLargeN) {
    const double n = 1e5, half = 3.0 * std::sqrt(6.29 / n);
    int inside = 0;
    const int runs = 20;
    for (int j = 0; j < runs; ++j) {
        const auto x = sample(static_cast<std::size_t>(n), p07, derive_seed(1, j, 0));
        const EstimateResult r = mle(x, {0.5, 1.2, 0.0});
        ASSERT_TRUE(r.ok);
        if (std::hypot(r.params.xi - 0.7, r.params.beta - 1.0) < half) ++inside;
    }
    EXPECT_GE(inside, 19);
}

TEST(Mle, ScoreEquationsVanish) {
    const auto x = sample(2000, p07, 3);
    const EstimateResult r = mle(x, {0.5, 1.0, 0.0});
    ASSERT_TRUE(r.ok);
    const Vec2 s = detail::mean_scores(x, r.params);
    EXPECT_LT(max_abs(d_beta(r.params.beta) * s), 1e-6);
}

TEST(Mle, SingleOutlierBreaksIt) {
    auto x = sample(1000, p07, 4);
    const EstimateResult clean = mle(x, {0.7, 1.0, 0.0});
    x.push_back(1e10);
    const EstimateResult far = mle(x, {0.7, 1.0, 0.0});
    x.back() = 1e300;
    const EstimateResult farther = mle(x, {0.7, 1.0, 0.0});
    ASSERT_TRUE(far.ok && farther.ok);
    // ξ̂ follows the outlier upward without bound
    EXPECT_GT(far.params.xi, clean.params.xi);
    EXPECT_GT(farther.params.xi, far.params.xi + 1.0);
}

TEST(Mle, ScaleEquivariance) {
    const auto x = sample(500, p07, 6);
    const EstimateResult a = mle(x, {0.7, 1.0, 0.0}), b = mle(scaled(x, 4.0), {0.7, 4.0, 0.0});
    ASSERT_TRUE(a.ok && b.ok);
    EXPECT_NEAR(a.params.xi, b.params.xi, 1e-6);
    EXPECT_NEAR(4.0 * a.params.beta, b.params.beta, 1e-6 * b.params.beta);
}

TEST(Mle, InfeasibleStartRecovers) {
    const auto x = sample(300, p07, 7);
    const EstimateResult r = mle(x, {-0.4, 0.5, 0.0}); // endpoint 1.25, well inside the data
    ASSERT_TRUE(r.ok);
    EXPECT_NEAR(r.params.xi, mle(x, {0.7, 1.0, 0.0}).params.xi, 1e-6);
}

TEST(MleIf, TraceAndCovariance) {
    const Mat2 V = as_var(mle_if(p07));
    EXPECT_NEAR(trace(V), 6.29, 1e-3);
    EXPECT_NEAR(V(0, 1), -1.7, 1e-8);
}

TEST(Smle, SkipCountAndRate) {
    const SmleConfig c;
    EXPECT_EQ(c.skip_count(1000), 23u);
    EXPECT_NEAR(c.alpha(1000), 0.022, 5e-4);
}

TEST(Smle, ZeroSkipIsMle) {
    SmleConfig c;
    c.r_prime = 0.0;
    const auto x = sample(400, p07, 9);
    const EstimateResult a = smle(x, c, {0.7, 1.0, 0.0}), b = mle(x, {0.7, 1.0, 0.0});
    EXPECT_EQ(a.params, b.params);
}

TEST(Smle, DropsTheLargestObservations) {
    auto x = sample(400, p07, 10);
    const EstimateResult a = smle(x, {}, {0.7, 1.0, 0.0});
    std::sort(x.begin(), x.end());
    for (std::size_t i = 0; i < 14; ++i) x[399 - i] = 1e10; // skip count at n=400 is 14
    const EstimateResult b = smle(x, {}, {0.7, 1.0, 0.0});
    ASSERT_TRUE(a.ok && b.ok);
    EXPECT_EQ(a.params, b.params);
}

TEST(SmleIf, TableRow) {
    const InfluenceFunction psi = smle_if(p07, 0.02);
    EXPECT_NEAR(trace(as_var(psi)), 7.03, 0.01 * 7.03);
    EXPECT_NEAR(0.5 * ges(psi), 3.75, 0.01 * 3.75);
    EXPECT_LT(check_ic_conditions(psi).max_abs(), 1e-8);
}

TEST(SmleIf, VanishingSkipApproachesMle) {
    const InfluenceFunction s = smle_if(p07, 1e-9), m = mle_if(p07);
    for (double x : {0.1, 1.0, 5.0}) EXPECT_LT(max_abs(s(x) - m(x)), 1e-4);
}

TEST(Mde, PerfectFitObjective) {
    const std::size_t n = 200;
    const auto x = quantile_sample(n, p07);
    EXPECT_NEAR(cvm_statistic(x, p07), 1.0 / (12.0 * n), 1e-15);
    const EstimateResult r = mde_cvm(x, {0.5, 1.3, 0.0});
    ASSERT_TRUE(r.ok);
    EXPECT_NEAR(r.params.xi, 0.7, 1e-3);
    EXPECT_NEAR(r.params.beta, 1.0, 1e-3);
}

TEST(Mde, ConsistentAtLargeN) {
    const double n = 1e5;
    const EstimateResult r = mde_cvm(sample(static_cast<std::size_t>(n), p07, 12), {0.6, 1.1, 0.0});
    ASSERT_TRUE(r.ok);
    EXPECT_LT(std::hypot(r.params.xi - 0.7, r.params.beta - 1.0), 3.0 * std::sqrt(9.76 / n));
}

TEST(Mde, ScaleEquivariance) {
    const auto x = sample(300, p07, 13);
    const EstimateResult a = mde_cvm(x, {0.7, 1.0, 0.0}), b = mde_cvm(scaled(x, 2.0), {0.7, 2.0, 0.0});
    ASSERT_TRUE(a.ok && b.ok);
    EXPECT_NEAR(a.params.xi, b.params.xi, 1e-4);
    EXPECT_NEAR(2.0 * a.params.beta, b.params.beta, 2e-4);
}

TEST(Mde, FiniteUnderHeavyContamination) {
    auto x = sample(1000, p07, 14);
    for (std::size_t i = 0; i < 300; ++i) x[i] = 1e10;
    const EstimateResult r = mde_cvm(x, {0.7, 1.0, 0.0});
    ASSERT_TRUE(r.ok);
    EXPECT_LT(r.params.xi, 10.0);
}

TEST(MdeIf, ClosedFormAgreesWithQuadrature) {
    for (double xi : {0.3, 0.7, 1.5}) {
        const GpdParams p{xi, 1.0, 0.0};
        const Mat2 cf = mde_as_var_closed_form(p), q = as_var(mde_if(p), 1e-11);
        EXPECT_LT(max_abs(cf - q) / max_abs(cf), 1e-4) << xi;
    }
    // polynomial V-matrix evaluated by hand: 9.756693...; printed rounded as 9.76
    EXPECT_NEAR(trace(mde_as_var_closed_form(p07)), 9.7566935, 1e-6);
}

TEST(MdeIf, SideConditionsAndBias) {
    const InfluenceFunction psi = mde_if(p07);
    EXPECT_LT(check_ic_conditions(psi).max_abs(), 1e-8);
    EXPECT_NEAR(0.5 * ges(psi), 2.45, 0.01 * 2.45);
}

TEST(MdeFsbp, ComputedAndPrintedValues) {
    const MdeFsbpBound b = mde_fsbp_bound();
    EXPECT_NEAR(b.computed, 8.0 / 27.0, 1e-3);
    EXPECT_DOUBLE_EQ(b.printed_fraction, 4.0 / 9.0);
    EXPECT_DOUBLE_EQ(b.printed_percent, 0.36);
}
