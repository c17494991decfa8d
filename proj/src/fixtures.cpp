#include "gesdispatch/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ges {

namespace {

constexpr double kPi = 3.14159265358979323846;

double outdoor(std::size_t t) { return 32.0 + 4.0 * std::sin(2.0 * kPi * (static_cast<double>(t) - 9.0) / 24.0); }

// Lowest at 09:00, highest at 19:00.
double on_profile(std::size_t t) {
    const double h = static_cast<double>(t);
    if (h >= 9 && h <= 19) return 0.83 + 0.16 * (h - 9) / 10.0;
    const double since = h > 19 ? h - 19 : h + 5;
    return 0.99 - 0.16 * since / 14.0;
}

Series load_profile(std::size_t T, double base, double amp) {
    Series s(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double h = static_cast<double>(t);
        const double day = std::exp(-0.5 * std::pow((h - 12.0) / 4.0, 2));
        const double eve = std::exp(-0.5 * std::pow((h - 20.0) / 2.0, 2));
        s[t] = base + amp * (0.6 * day + eve);
    }
    return s;
}

Series pv_profile(std::size_t T, double peak) {
    Series s(T, 0.0);
    for (std::size_t t = 6; t < std::min<std::size_t>(T, 19); ++t)
        s[t] = peak * std::sin(kPi * (static_cast<double>(t) - 6.0) / 12.0);
    return s;
}

DduSpec paper_ddu() {
    DduSpec d;
    d.sigma_g = 0.5;
    d.sigma_h = 0.1;
    d.beta_up = 3.0;
    d.beta_lo = 6.0;
    d.lambda = 0.7;
    d.c_bar = 1.5;
    return d;
}

UnitModel air_conditioner(const std::string& id, Rng& rng, bool uncertain_baseline) {
    auto u = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
    ThermalParams th;
    th.resistance = u(1.6, 2.4);
    th.capacitance = u(1.6, 2.4);
    th.cop = u(2.4, 2.8);
    th.temp_min = 18.0;
    th.temp_max = 30.0;
    const double setpoint = u(23.0, 25.0);
    const double width = u(1.8, 2.2);
    th.p_min = 0.0;
    th.p_max = u(5.0, 6.0);
    th.deadband = u(0.8, 1.2);
    const std::size_t T = 24;
    th.comfort_lo.resize(T);
    th.comfort_hi.resize(T);
    th.outdoor_temp.resize(T);
    th.baseline_power.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        // Occupants tolerate a wider band at night.
        const double night = (t < 7 || t >= 23) ? 0.5 : 0.0;
        th.comfort_lo[t] = setpoint - width - night;
        th.comfort_hi[t] = setpoint + width;
        th.outdoor_temp[t] = outdoor(t);
        th.baseline_power[t] = std::clamp((outdoor(t) - setpoint) / (th.cop * th.resistance), th.p_min, th.p_max);
    }

    UnitModel m;
    m.device.unit_id = id;
    m.device.kind = DeviceKind::TCL_IVA;
    m.device.physics = th;
    m.device.on_prob.resize(T);
    const double jitter = u(-0.005, 0.005);
    for (std::size_t t = 0; t < T; ++t) m.device.on_prob[t] = std::clamp(on_profile(t) + jitter, 0.0, 1.0);

    auto tn = [](double mean, double rel) {
        return DistributionSpec::truncated_normal(mean, rel * mean, mean * (1 - 2 * rel), mean * (1 + 2 * rel));
    };
    m.uncertainty.params["R"] = tn(th.resistance, 0.05);
    m.uncertainty.params["C"] = tn(th.capacitance, 0.05);
    m.uncertainty.params["p_max"] = tn(th.p_max, 0.05);
    m.uncertainty.params["comfort_lo_offset"] = DistributionSpec::truncated_normal(0.0, 0.3, -0.6, 0.6);
    m.uncertainty.params["comfort_hi_offset"] = DistributionSpec::truncated_normal(0.0, 0.3, -0.6, 0.6);
    if (uncertain_baseline)
        for (std::size_t t = 0; t < T; ++t)
            m.uncertainty.baseline.push_back(
                DistributionSpec::lognormal_from_moments(th.baseline_power[t], 0.1 * th.baseline_power[t]));
    m.ddu = paper_ddu();
    m.price_c = {0.3};
    m.price_d = {0.6};
    return m;
}

} // namespace

Series tou_tariff(std::size_t horizon) {
    Series s(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t h = t % 24;
        s[t] = h < 8 ? 0.5 : (h >= 17 && h < 22 ? 1.4 : 0.9);
    }
    return s;
}

std::vector<std::size_t> peak_window() { return {19, 20, 21}; }

ScenarioBundle smoke_fleet(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t T = 24;
    ScenarioBundle s;
    s.name = "smoke3";
    s.horizon = T;
    s.dt = 1.0;
    s.tou_price = tou_tariff(T);

    UnitModel bes;
    bes.device.unit_id = "bes_01";
    bes.device.kind = DeviceKind::BES;
    StorageParams b;
    b.capacity = 20.0;
    b.eta_c = 0.95;
    b.eta_d = 0.95;
    b.self_discharge = 0.002;
    b.p_c_rated = 5.0;
    b.p_d_rated = 5.0;
    b.soc_lo = {0.1};
    b.soc_hi = {0.9};
    b.soc_init = 0.5;
    b.deadband = 0.2;
    bes.device.physics = b;
    bes.uncertainty.params["capacity"] = DistributionSpec::truncated_normal(20.0, 0.6, 18.5, 21.5);
    bes.uncertainty.params["p_d_rated"] = DistributionSpec::truncated_normal(5.0, 0.2, 4.5, 5.5);
    bes.uncertainty.params["soc_lo_offset"] = DistributionSpec::truncated_normal(0.0, 0.02, -0.05, 0.05);
    bes.uncertainty.params["soc_hi_offset"] = DistributionSpec::truncated_normal(0.0, 0.02, -0.05, 0.05);
    bes.ddu = paper_ddu();
    bes.ddu.variant = DiscomfortVariant::F1_DisutilityOnly;
    bes.price_c = {0.3};
    bes.price_d = {0.6};
    s.units.push_back(bes);

    s.units.push_back(air_conditioner("tcl_01", rng, true));

    UnitModel ev;
    ev.device.unit_id = "ev_01";
    ev.device.kind = DeviceKind::EV;
    StorageParams e;
    e.capacity = 40.0;
    e.eta_c = 0.92;
    e.eta_d = 0.92;
    e.p_c_rated = 7.0;
    e.p_d_rated = 7.0;
    e.soc_lo = {0.2};
    e.soc_hi = {0.95};
    e.soc_init = 0.4;
    e.deadband = 0.1;
    e.baseline_charge.assign(T, 0.0);
    e.baseline_dsoc.assign(T, 0.0);
    for (std::size_t t = 0; t < 6; ++t) {
        e.baseline_charge[t] = 3.0;
        e.baseline_dsoc[t] = e.eta_c * 3.0 / e.capacity;
    }
    const double trip = -3.0 * e.eta_c * 3.0 / e.capacity;
    for (std::size_t t : {7, 8, 17, 18}) e.baseline_dsoc[t] = 0.5 * trip;
    e.baseline_soc.resize(T);
    double soc = e.soc_init;
    for (std::size_t t = 0; t < T; ++t) {
        soc += e.baseline_dsoc[t];
        e.baseline_soc[t] = soc;
    }
    ev.device.physics = e;
    ev.uncertainty.params["capacity"] = DistributionSpec::truncated_normal(40.0, 1.0, 37.0, 43.0);
    ev.uncertainty.params["soc_lo_offset"] = DistributionSpec::truncated_normal(0.0, 0.02, -0.05, 0.05);
    for (std::size_t t = 0; t < T; ++t)
        ev.uncertainty.baseline.push_back(e.baseline_charge[t] > 0
                                              ? DistributionSpec::lognormal_from_moments(3.0, 0.3)
                                              : DistributionSpec::point(0.0));
    ev.ddu = paper_ddu();
    ev.ddu.variant = DiscomfortVariant::F3_LinearOneSided;
    ev.price_c = {0.3};
    ev.price_d = {0.6};
    s.units.push_back(ev);

    const Series load = load_profile(T, 12.0, 10.0);
    const Series pv = pv_profile(T, 6.0);
    for (std::size_t t = 0; t < T; ++t)
        s.load.push_back(DistributionSpec::normal(load[t], 0.05 * load[t]));
    s.res_names = {"pv_01"};
    s.res.emplace_back();
    for (std::size_t t = 0; t < T; ++t)
        s.res[0].push_back(pv[t] > 0 ? DistributionSpec::truncated_normal(pv[t], 0.1 * pv[t], 0.0, 2.0 * pv[t])
                                     : DistributionSpec::point(0.0));
    s.grid_cap = 40.0;
    s.gamma = 0.05;
    s.mode = ModelMode::M2;
    s.shape = ShapeClass{ShapeClass::Unimodal};
    s.reserve.upper = 8.0;
    return s;
}

ScenarioBundle synthetic_100tcl(std::uint64_t seed, std::size_t units) {
    Rng rng(seed);
    const std::size_t T = 24;
    ScenarioBundle s;
    s.name = "synthetic_100tcl";
    s.horizon = T;
    s.dt = 1.0;
    s.tou_price = tou_tariff(T);
    for (std::size_t i = 0; i < units; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "tcl_%03zu", i + 1);
        s.units.push_back(air_conditioner(id, rng, true));
    }
    const double scale = static_cast<double>(units) / 100.0;
    const Series load = load_profile(T, 400.0 * scale, 300.0 * scale);
    const Series pv = pv_profile(T, 150.0 * scale);
    for (std::size_t t = 0; t < T; ++t) s.load.push_back(DistributionSpec::normal(load[t], 0.03 * load[t]));
    s.res_names = {"pv_01"};
    s.res.emplace_back();
    for (std::size_t t = 0; t < T; ++t)
        s.res[0].push_back(pv[t] > 0 ? DistributionSpec::truncated_normal(pv[t], 0.1 * pv[t], 0.0, 2.0 * pv[t])
                                     : DistributionSpec::point(0.0));
    s.grid_cap = 1200.0 * scale;
    s.gamma = 0.05;
    s.mode = ModelMode::M3;
    s.shape = ShapeClass{ShapeClass::Unimodal};
    s.reserve.upper = 6.0;
    return s;
}

} // namespace ges
