#include <gtest/gtest.h>

#include <chrono>
#include <sstream>

#include "gpdrobust/grid.hpp"

using namespace gpdrobust;

namespace {

const InterpolationGrid& omse_grid() {
    static const InterpolationGrid g = build_grid(IfKind::OMSE, {0.5, 0.6, 0.7, 0.8, 0.9}, 0.5);
    return g;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

TEST(Grid, DefaultNodes) {
    const auto g = default_xi_grid();
    ASSERT_EQ(g.size(), 61u);
    EXPECT_DOUBLE_EQ(g.front(), 0.01);
    EXPECT_DOUBLE_EQ(g.back(), 3.0);
}

TEST(Grid, NodeStoresSolverOutput) {
    const InterpolationGrid g = build_grid(IfKind::OMSE, {0.6, 0.7, 0.8}, 0.5);
    EXPECT_EQ(g.triples[1], solve_omse({0.7, 1.0, 0.0}, 0.5).triple);
    EXPECT_EQ(interpolate_triple(g, 0.7), g.triples[1]);
    EXPECT_TRUE(g.dropped.empty());
}

TEST(Grid, BuildValidation) {
    EXPECT_THROW(build_grid(IfKind::OMSE, {0.5, 0.6}), invalid_parameter);
    EXPECT_THROW(build_grid(IfKind::OMSE, {0.5, 0.6}, -1.0), invalid_parameter);
    EXPECT_THROW(build_grid(IfKind::MBRE, {0.6, 0.5}), invalid_parameter);
    EXPECT_THROW(build_grid(IfKind::MBRE, {0.5}), invalid_parameter);
    EXPECT_THROW(build_grid(IfKind::MBRE, {-0.6, 0.5}), regularity_error);
    EXPECT_THROW(build_grid(IfKind::MLE, {0.5, 0.6}), invalid_parameter);
}

TEST(Interpolate, AtNodeMatchesDirectSolve) {
    const OptimalSolution d = solve_omse({0.7, 1.0, 0.0}, 0.5);
    const InfluenceFunction psi = interpolate_if(omse_grid(), {0.7, 1.0, 0.0});
    ASSERT_TRUE(psi.metadata().triple);
    EXPECT_NEAR(psi.metadata().triple->b, d.triple.b, 1e-6);
    const double direct = as_mse(d.psi, 0.5), interp = as_mse(psi, 0.5);
    EXPECT_NEAR(interp, direct, 1e-3 * direct);
}

TEST(Interpolate, MidwayWithinOnePercent) {
    for (double xi : {0.55, 0.65, 0.75, 0.85}) {
        const double direct = as_mse(solve_omse({xi, 1.0, 0.0}, 0.5).psi, 0.5);
        const double interp = as_mse(interpolate_if(omse_grid(), {xi, 1.0, 0.0}), 0.5);
        EXPECT_NEAR(interp, direct, 0.01 * direct) << xi;
    }
}

TEST(Interpolate, SideConditionsHold) {
    for (double beta : {1.0, 3.0}) {
        const InfluenceFunction psi = interpolate_if(omse_grid(), {0.65, beta, 0.0});
        EXPECT_LT(check_ic_conditions(psi).max_abs(), 1e-6);
    }
}

TEST(Interpolate, MbreGridSideConditions) {
    const InterpolationGrid g = build_grid(IfKind::MBRE, {0.5, 0.7, 0.9});
    const InfluenceFunction psi = interpolate_if(g, {0.6, 2.0, 0.0});
    EXPECT_LT(check_ic_conditions(psi).max_abs(), 1e-6);
    const double direct = solve_mbre({0.6, 1.0, 0.0}).triple.b;
    EXPECT_NEAR(ges(psi), direct, 0.01 * direct);
}

TEST(Interpolate, OutsideHullThrows) {
    EXPECT_THROW(interpolate_triple(omse_grid(), 0.49), domain_error);
    EXPECT_THROW(interpolate_if(omse_grid(), {1.2, 1.0, 0.0}), domain_error);
}

TEST(Interpolate, FastModeAtNodeIsSolverIf) {
    InterpolationSettings s;
    s.fast = true;
    const InfluenceFunction a = interpolate_if(omse_grid(), {0.7, 1.0, 0.0}, s);
    const OptimalSolution d = solve_omse({0.7, 1.0, 0.0}, 0.5);
    for (double x : {0.01, 1.0, 10.0}) EXPECT_LT(max_abs(a(x) - d.psi(x)), 1e-12);
}

TEST(Interpolate, MuchFasterThanSolving) {
    const GpdParams p{0.65, 1.0, 0.0};
    (void)interpolate_if(omse_grid(), p); // build the grid outside the timing
    auto t0 = std::chrono::steady_clock::now();
    const int ns = 3;
    for (int i = 0; i < ns; ++i) (void)solve_omse(p, 0.5);
    const double solve = seconds_since(t0) / ns;
    t0 = std::chrono::steady_clock::now();
    const int ni = 100;
    for (int i = 0; i < ni; ++i) (void)interpolate_if(omse_grid(), p);
    const double interp = seconds_since(t0) / ni;
    EXPECT_GE(solve / interp, 50.0) << "solve " << solve << " s, interpolate " << interp << " s";
}

TEST(GridFile, RoundTripIsBitExact) {
    std::stringstream ss;
    write_grid(ss, omse_grid());
    const InterpolationGrid back = read_grid(ss);
    EXPECT_TRUE(back == omse_grid());
    EXPECT_EQ(back.radius, omse_grid().radius);
}

TEST(GridFile, RoundTripWithoutRadius) {
    InterpolationGrid g;
    g.kind = IfKind::RMXE;
    g.xi = {0.1, 0.2};
    g.triples = {LagrangeTriple{Mat2{1.0 / 3.0, 0.1, 0.1, 2.0}, {-0.0, 1e-300}, 4.25}, LagrangeTriple{}};
    std::stringstream ss;
    write_grid(ss, g);
    EXPECT_TRUE(read_grid(ss) == g);
}

TEST(GridFile, RejectsGarbage) {
    std::stringstream ss("not a grid\n");
    EXPECT_THROW(read_grid(ss), io_error);
    EXPECT_THROW(load_grid("/nonexistent/path.grid"), io_error);
}

TEST(GridFile, KindNames) {
    EXPECT_EQ(parse_grid_kind(grid_kind_name(IfKind::MBRE)), IfKind::MBRE);
    EXPECT_EQ(parse_grid_kind("OMSE"), IfKind::OMSE);
    EXPECT_THROW(parse_grid_kind("mle"), io_error);
}
