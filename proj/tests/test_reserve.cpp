#include "gesdispatch/reserve.hpp"
#include "gesdispatch/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ges;

namespace {

SolveConfig m3() {
    SolveConfig c;
    c.mode = ModelMode::M3;
    c.shape = {ShapeClass::Unimodal};
    return c;
}

ScenarioBundle with_on_prob(double p) {
    ScenarioBundle s = smoke_fleet();
    for (auto& u : s.units) u.device.on_prob.assign(s.horizon, p);
    return s;
}

ReserveSpec spec(ReserveMode mode) {
    ReserveSpec r = smoke_fleet().reserve;
    r.mode = mode;
    return r;
}

} // namespace

TEST(RequiredReliability, Examples) {
    EXPECT_NEAR(required_reliability(0.83, 0.05), 1.0 - 0.05 / 0.17, 1e-15);
    EXPECT_NEAR(required_reliability(0.83, 0.05), 0.70588, 1e-5);
    EXPECT_EQ(required_reliability(0.99, 0.05), 0.0);
    EXPECT_EQ(required_reliability(0.5, 0.5), 0.0);
}

TEST(RequiredReliability, Domain) {
    EXPECT_THROW(required_reliability(1.0, 0.05), Error);
    EXPECT_THROW(required_reliability(-0.1, 0.05), Error);
    EXPECT_THROW(required_reliability(0.5, 0.0), Error);
    EXPECT_THROW(required_reliability(0.5, 1.0), Error);
    try {
        required_reliability(0.5, 1.5);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidProbability);
    }
}

TEST(RequiredReliability, MonotoneOnGrid) {
    for (int i = 0; i < 99; ++i) {
        const double p = i / 100.0;
        for (int j = 1; j < 99; ++j) {
            const double g = j / 100.0;
            EXPECT_LE(required_reliability(p, g + 0.01), required_reliability(p, g));
            EXPECT_LE(required_reliability(p + 0.01, g), required_reliability(p, g));
        }
    }
}

TEST(ReservePrice, Examples) {
    EXPECT_EQ(reserve_price(1.0, 1.7, 2.0), 1.7);
    EXPECT_EQ(reserve_price(0.5, 1.0, 2.0), 0.25);
    EXPECT_EQ(reserve_price(0.0, 1.0, 2.0), 0.0);
}

TEST(ReservePrice, MonotoneAndConvex) {
    for (double b : {1.0, 1.5, 2.0, 3.0}) {
        const double h = 0.01;
        for (int i = 1; i < 99; ++i) {
            const double r = i * h;
            EXPECT_GE(reserve_price(r + h, 1.0, b), reserve_price(r, 1.0, b));
            const double second = reserve_price(r + h, 1.0, b) - 2.0 * reserve_price(r, 1.0, b) +
                                  reserve_price(r - h, 1.0, b);
            EXPECT_GE(second, -1e-15);
        }
    }
}

TEST(ReserveSpecCheck, Invariants) {
    ReserveSpec r;
    r.lower = 2.0;
    r.upper = 1.0;
    EXPECT_THROW(validate(r), Error);
    r = {};
    r.a = -1.0;
    EXPECT_THROW(validate(r), Error);
    r = {};
    r.b = -0.5;
    EXPECT_THROW(validate(r), Error);
    EXPECT_NO_THROW(validate(ReserveSpec{}));
}

TEST(SolveWithReserve, AlwaysOnGivesBaseModel) {
    const ScenarioBundle scn = with_on_prob(1.0);
    const BoundStats stats = compute_bound_stats(scn, 10000, 4);
    const auto base = robust_solve_r1(scn, stats, m3());
    for (auto mode : {ReserveMode::S1_Deterministic, ReserveMode::S2_Probabilistic}) {
        const auto s = solve_with_reserve(scn, stats, spec(mode), m3());
        ASSERT_EQ(s.reserve.size(), scn.units.size());
        for (const auto& r : s.reserve)
            for (double x : r) EXPECT_EQ(x, 0.0);
        EXPECT_NEAR(s.objective, base.objective, 1e-6 * std::abs(base.objective));
    }
}

TEST(SolveWithReserve, MissingOnProb) {
    ScenarioBundle scn = smoke_fleet();
    for (auto& u : scn.units) u.device.on_prob.clear();
    const BoundStats stats = compute_bound_stats(scn, 10000, 4);
    try {
        solve_with_reserve(scn, stats, spec(ReserveMode::S2_Probabilistic), m3());
        FAIL() << "expected MissingOnProb";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingOnProb);
    }
    EXPECT_THROW(solve_with_reserve(scn, stats, spec(ReserveMode::None), m3()), Error);
}

TEST(SolveWithReserve, ScheduleRespectsReserveRows) {
    const ScenarioBundle scn = with_on_prob(0.83);
    const BoundStats stats = compute_bound_stats(scn, 10000, 4);
    auto sp = spec(ReserveMode::S2_Probabilistic);
    sp.ramp_up = sp.ramp_dn = 1.0;
    const auto s = solve_with_reserve(scn, stats, sp, m3());
    const auto units = prepare_units(scn, ModelMode::M3, &stats);
    for (std::size_t i = 0; i < units.size(); ++i)
        for (std::size_t t = 0; t < scn.horizon; ++t) {
            const double rs = s.reserve[i][t];
            EXPECT_GE(rs, sp.lower - 1e-9);
            EXPECT_LE(rs, std::max(sp.lower, units[i].reserve_upper) + 1e-7);
            EXPECT_LE(s.schedules[i].p_d[t] + rs, units[i].pd_hi[t] + 1e-7);
            if (t > 0) {
                EXPECT_LE(std::abs(rs - s.reserve[i][t - 1]), 1.0 + 1e-7);
            }
        }
    for (const auto& sch : s.schedules) EXPECT_NEAR(sch.soc.back(), sch.soc.front(), 1e-7);
    EXPECT_NEAR(s.objective, s.ges_cost + s.grid_cost + s.reserve_cost, 1e-9);
}

TEST(SolveWithReserve, PriceDependsOnMode) {
    const ScenarioBundle scn = with_on_prob(0.83);
    const BoundStats stats = compute_bound_stats(scn, 10000, 4);
    const auto units = prepare_units(scn, ModelMode::M3, &stats);
    const auto p1 = reserve_prices(units, spec(ReserveMode::S1_Deterministic), 0.05);
    const auto p2 = reserve_prices(units, spec(ReserveMode::S2_Probabilistic), 0.05);
    const double a = scn.reserve.a, b = scn.reserve.b;
    EXPECT_EQ(p1[0][3], a);
    EXPECT_NEAR(p2[0][3], a * std::pow(1.0 - 0.05 / 0.17, b), 1e-12);
}

TEST(SolveWithReserve, GammaSweepTrends) {
    double prev_resp = std::numeric_limits<double>::infinity(), prev_res = -1.0;
    for (double gamma : {0.05, 0.30, 0.55, 0.80}) {
        ScenarioBundle scn = with_on_prob(0.83);
        scn.gamma = gamma;
        const BoundStats stats = compute_bound_stats(scn, 10000, 4);
        const auto s2 = solve_with_reserve(scn, stats, spec(ReserveMode::S2_Probabilistic), m3());
        const auto s1 = solve_with_reserve(scn, stats, spec(ReserveMode::S1_Deterministic), m3());
        const double resp = s2.charge_energy(scn.dt) + s2.discharge_energy(scn.dt);
        const double res = s2.reserve_energy(scn.dt);
        EXPECT_LE(resp, prev_resp + 1e-3) << "gamma " << gamma;
        EXPECT_GE(res, prev_res - 1e-3) << "gamma " << gamma;
        EXPECT_LE(s2.objective, s1.objective + 1e-6) << "gamma " << gamma;
        prev_resp = resp;
        prev_res = res;
    }
}
