#include "gesdispatch/ges_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ges;

namespace {

DeviceDescription tcl_device(std::size_t T = 24) {
    DeviceDescription d;
    d.unit_id = "tcl";
    d.kind = DeviceKind::TCL_IVA;
    ThermalParams th;
    th.resistance = 2.0;
    th.capacitance = 2.0;
    th.cop = 2.5;
    th.temp_min = 20.0;
    th.temp_max = 28.0;
    th.comfort_lo = Series(T, 22.0);
    th.comfort_hi = Series(T, 26.0);
    th.p_min = 0.0;
    th.p_max = 5.0;
    th.outdoor_temp = Series(T, 32.0);
    th.baseline_power = Series(T, 1.6);
    th.deadband = 1.0;
    d.physics = th;
    return d;
}

DeviceDescription bes_device(double eps, double S, std::size_t T = 24) {
    DeviceDescription d;
    d.unit_id = "bes";
    d.kind = DeviceKind::BES;
    StorageParams st;
    st.capacity = S;
    st.self_discharge = eps;
    st.eta_c = 0.95;
    st.eta_d = 0.95;
    st.p_c_rated = 3.0;
    st.p_d_rated = 3.0;
    st.soc_lo = {0.1};
    st.soc_hi = {0.9};
    st.soc_init = 0.5;
    d.physics = st;
    (void)T;
    return d;
}

GesParams simple_params(std::size_t T, double S = 10.0) {
    GesParams p;
    p.unit_id = "u";
    p.dt = 1.0;
    p.capacity = S;
    p.p_c_max.assign(T, 2.0);
    p.p_d_max.assign(T, 2.0);
    p.soc_lo.assign(T, 0.0);
    p.soc_hi.assign(T, 1.0);
    p.alpha.assign(T, 0.0);
    p.soc_init = 0.5;
    p.soc_baseline.assign(T, 0.5);
    p.soc_baseline_avg.assign(T, 0.5);
    p.deadband.assign(T, 0.1);
    p.on_prob.assign(T, 1.0);
    return p;
}

UnitSchedule consistent_schedule(const Series& pc, const Series& pd, const GesParams& p) {
    UnitSchedule s;
    s.p_c = pc;
    s.p_d = pd;
    s.soc = simulate_soc(pc, pd, p);
    return s;
}

} // namespace

TEST(MapDevice, TclSelfDischargeMatchesHighPrecisionOracle) {
    const long double oracle = 1.0L - std::exp(-0.25L);
    GesParams p = map_device_to_ges(tcl_device(), 1.0, 24);
    EXPECT_NEAR(p.self_discharge, static_cast<double>(oracle), 1e-15);
    EXPECT_NEAR(p.self_discharge, 0.221199, 1e-6);
}

TEST(MapDevice, TclCapacityAndUnitEfficiency) {
    GesParams p = map_device_to_ges(tcl_device(), 1.0, 24);
    const double eps = 1.0 - std::exp(-0.25);
    EXPECT_NEAR(p.capacity, 1.0 * 8.0 / (2.5 * 2.0 * eps), 1e-12);
    EXPECT_EQ(p.eta_c, 1.0);
    EXPECT_EQ(p.eta_d, 1.0);
    for (std::size_t t = 0; t < 24; ++t) {
        EXPECT_NEAR(p.alpha[t], eps * p.soc_baseline[t], 1e-15);
        EXPECT_NEAR(p.p_c_max[t], 5.0 - 1.6, 1e-12);
        EXPECT_NEAR(p.p_d_max[t], 1.6, 1e-12);
        EXPECT_NEAR(p.soc_lo[t], (28.0 - 26.0) / 8.0, 1e-15);
        EXPECT_NEAR(p.soc_hi[t], (28.0 - 22.0) / 8.0, 1e-15);
    }
}

TEST(MapDevice, TclSocOfIndoorTemperature) {
    EXPECT_DOUBLE_EQ(tcl_soc(24.0, 26.0, 22.0), (26.0 - 24.0) / (26.0 - 22.0));
    EXPECT_DOUBLE_EQ(tcl_soc(24.0, 26.0, 22.0), 0.5);
}

TEST(MapDevice, TclSocStrictlyDecreasingInIndoorTemperature) {
    double prev = tcl_soc(20.0, 28.0, 20.0);
    for (int k = 1; k <= 80; ++k) {
        const double s = tcl_soc(20.0 + 0.1 * k, 28.0, 20.0);
        EXPECT_LT(s, prev);
        prev = s;
    }
}

TEST(MapDevice, TclSelfDischargeFirstOrderLimit) {
    const double rc = 4.0;
    double prev_err = 1.0;
    for (double dt : {1.0, 0.5, 0.25}) {
        const double eps = tcl_self_discharge(2.0, 2.0, dt);
        const double err = std::abs(eps / dt - 1.0 / rc);
        EXPECT_LT(err, dt / (2.0 * rc * rc) + 1e-12);
        EXPECT_LT(err, prev_err);
        prev_err = err;
    }
}

TEST(MapDevice, BesIsIdentity) {
    GesParams p = map_device_to_ges(bes_device(0.01, 10.0), 1.0, 24);
    EXPECT_EQ(p.self_discharge, 0.01);
    EXPECT_EQ(p.capacity, 10.0);
    for (double a : p.alpha) EXPECT_EQ(a, 0.0);
    EXPECT_EQ(p.eta_c, 0.95);
    EXPECT_EQ(p.soc_lo[5], 0.1);
    EXPECT_EQ(p.soc_hi[5], 0.9);
}

TEST(MapDevice, EvRatingsReducedByBaseline) {
    DeviceDescription d = bes_device(0.0, 40.0);
    d.kind = DeviceKind::EV;
    auto& st = std::get<StorageParams>(d.physics);
    st.p_c_rated = 7.0;
    st.p_d_rated = 5.0;
    st.baseline_charge = Series(24, 2.0);
    st.baseline_discharge = Series(24, 1.0);
    st.baseline_dsoc = Series(24, 0.01);
    GesParams p = map_device_to_ges(d, 1.0, 24);
    EXPECT_DOUBLE_EQ(p.p_c_max[3], 5.0);
    EXPECT_DOUBLE_EQ(p.p_d_max[3], 4.0);
    EXPECT_DOUBLE_EQ(p.alpha[3], 0.01);
}

TEST(MapDevice, RejectsInvalidDevices) {
    auto d = tcl_device();
    std::get<ThermalParams>(d.physics).resistance = 0.0;
    EXPECT_THROW(map_device_to_ges(d, 1.0, 24), Error);
    d = tcl_device();
    std::get<ThermalParams>(d.physics).comfort_lo[3] = 26.5;
    try {
        map_device_to_ges(d, 1.0, 24);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidDevice);
    }
    d = bes_device(1.0, 10.0);
    EXPECT_THROW(map_device_to_ges(d, 1.0, 24), Error);
}

TEST(MapDevice, NonFiniteCapacityWhenExponentUnderflows) {
    auto d = tcl_device();
    auto& th = std::get<ThermalParams>(d.physics);
    th.resistance = 1e200;
    th.capacitance = 1e200;
    try {
        map_device_to_ges(d, 1.0, 24);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteResult);
    }
}

TEST(MapDevice, RandomValidDevicesSatisfyInvariants) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        DeviceDescription d = tcl_device(12);
        auto& th = std::get<ThermalParams>(d.physics);
        th.resistance = 0.5 + 4 * U(gen);
        th.capacitance = 0.5 + 4 * U(gen);
        th.cop = 1 + 3 * U(gen);
        th.temp_min = 18 + 2 * U(gen);
        th.temp_max = th.temp_min + 4 + 6 * U(gen);
        th.p_min = 0.0;
        th.p_max = 2 + 6 * U(gen);
        for (std::size_t t = 0; t < 12; ++t) {
            const double a = th.temp_min + (th.temp_max - th.temp_min) * 0.4 * U(gen);
            const double b = th.temp_max - (th.temp_max - th.temp_min) * 0.4 * U(gen);
            th.comfort_lo[t] = a;
            th.comfort_hi[t] = b;
            th.baseline_power[t] = th.p_max * 1.2 * U(gen);
            th.outdoor_temp[t] = 25 + 10 * U(gen);
        }
        GesParams p = map_device_to_ges(d, 0.25 + U(gen), 12);
        EXPECT_TRUE(validate(p).empty()) << k;
    }
}

TEST(StepSoc, HandExamples) {
    GesParams p = simple_params(4);
    EXPECT_NEAR(step_soc(0.5, 1.0, 0.0, p, 0), 0.6, 1e-15);
    EXPECT_EQ(step_soc(0.37, 0.0, 0.0, p, 0), 0.37);
    p.self_discharge = 0.2;
    p.alpha[1] = 0.1;
    EXPECT_NEAR(step_soc(0.5, 0.0, 0.0, p, 1), 0.5, 1e-15);
}

TEST(Feasibility, NullScheduleIsFeasible) {
    GesParams p = simple_params(24);
    auto r = check_feasibility(make_schedule(24, 0.5), p, 1e-9);
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Feasibility, SinglePowerBoundViolation) {
    GesParams p = simple_params(24, 100.0);
    Series pc(24, 0.0), pd(24, 0.0);
    pc[3] = p.p_c_max[3] + 0.5;
    pd[4] = 2.5 * 0.5;
    pd[5] = 2.5 - pd[4];
    auto r = check_feasibility(consistent_schedule(pc, pd, p), p, 1e-9);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].id, ConstraintId::ChargeBound);
    EXPECT_EQ(r.violations[0].t, 3u);
    EXPECT_NEAR(r.violations[0].magnitude, 0.5, 1e-12);
}

TEST(Feasibility, SustainabilityViolation) {
    GesParams p = simple_params(24);
    Series pc(24, 0.0), pd(24, 0.0);
    pc[10] = 2.0; // +0.2 SoC with S = 10 kWh
    auto r = check_feasibility(consistent_schedule(pc, pd, p), p, 1e-9);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].id, ConstraintId::EnergySustainability);
    EXPECT_NEAR(r.violations[0].magnitude, 0.2, 1e-12);
}

TEST(Feasibility, RecursionRampAndComplementarity) {
    GesParams p = simple_params(6);
    p.soc_ramp_up = 0.05;
    Series pc(6, 0.0), pd(6, 0.0);
    pc[1] = 1.0;
    pd[1] = 1.0;
    pc[2] = 1.0;
    pd[3] = 1.0;
    auto s = consistent_schedule(pc, pd, p);
    auto r = check_feasibility(s, p, 1e-9);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].id, ConstraintId::RampUp);
    EXPECT_EQ(r.violations[0].t, 2u);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(r.warnings[0].id, ConstraintId::Complementarity);

    s.soc[4] += 0.01;
    r = check_feasibility(s, p, 1e-9);
    bool recursion = false;
    for (const auto& v : r.violations) recursion |= v.id == ConstraintId::Recursion;
    EXPECT_TRUE(recursion);
}

TEST(Feasibility, LengthMismatch) {
    GesParams p = simple_params(24);
    try {
        check_feasibility(make_schedule(12, 0.5), p, 1e-9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
    }
}

TEST(Feasibility, RoundTripOfAcceptedSchedules) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    GesParams p = simple_params(24, 50.0);
    p.self_discharge = 0.02;
    p.p_c_max.assign(24, 30.0);
    p.p_d_max.assign(24, 30.0);
    for (auto& a : p.alpha) a = 0.01;
    int accepted = 0;
    for (int k = 0; k < 200; ++k) {
        Series pc(24), pd(24);
        for (std::size_t t = 0; t < 24; ++t) {
            pc[t] = 2.0 * U(gen);
            pd[t] = 2.0 * U(gen);
        }
        UnitSchedule s = consistent_schedule(pc, pd, p);
        // Close the cycle with the last step so the schedule can be accepted.
        const double need = s.soc[0] - (1 - p.self_discharge) * s.soc[23] - p.alpha[23];
        s.p_c[23] = need > 0 ? need * p.capacity : 0.0;
        s.p_d[23] = need < 0 ? -need * p.capacity : 0.0;
        s.soc = simulate_soc(s.p_c, s.p_d, p);
        auto r = check_feasibility(s, p, 1e-9);
        if (!r.ok()) continue;
        ++accepted;
        Series again = simulate_soc(s.p_c, s.p_d, p);
        for (std::size_t t = 0; t <= 24; ++t) EXPECT_NEAR(again[t], s.soc[t], 1e-9);
    }
    EXPECT_GT(accepted, 20);
}
