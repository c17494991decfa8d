#pragma once

// Shared scenario builders for the test binaries.

#include "gesdispatch/dispatch.hpp"
#include "gesdispatch/fixtures.hpp"

#include <cmath>
#include <functional>

namespace ges::testing {

inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double bisect(double lo, double hi, const std::function<double(double)>& f, double target) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Truncated-normal quantile by bisection on the CDF.
inline double tn_quantile_oracle(double mu, double s, double a, double b, double p) {
    const double za = Phi((a - mu) / s), zb = Phi((b - mu) / s);
    return bisect(a, b, [&](double x) { return (Phi((x - mu) / s) - za) / (zb - za); }, p);
}

/// Same fleet with every distribution replaced by a point mass at its mean.
inline ScenarioBundle deterministic(ScenarioBundle scn) {
    for (auto& u : scn.units) {
        u.device = mean_device(u.device, u.uncertainty);
        u.uncertainty = {};
    }
    for (auto& d : scn.load) d = DistributionSpec::point(mean(d));
    for (auto& r : scn.res)
        for (auto& d : r) d = DistributionSpec::point(mean(d));
    return scn;
}

/// Single battery with constant parameters.
inline UnitModel battery(const std::string& id, double capacity, double self_discharge = 0.0) {
    UnitModel m;
    m.device.unit_id = id;
    m.device.kind = DeviceKind::BES;
    StorageParams b;
    b.capacity = capacity;
    b.eta_c = 0.95;
    b.eta_d = 0.95;
    b.self_discharge = self_discharge;
    b.p_c_rated = 5.0;
    b.p_d_rated = 5.0;
    b.soc_lo = {0.1};
    b.soc_hi = {0.9};
    b.soc_init = 0.5;
    b.deadband = 0.2;
    m.device.physics = b;
    m.price_c = {0.3};
    m.price_d = {0.6};
    return m;
}

inline ScenarioBundle battery_scenario(std::size_t horizon = 24) {
    ScenarioBundle s;
    s.name = "battery";
    s.horizon = horizon;
    s.tou_price = tou_tariff(horizon);
    s.units.push_back(battery("bes_a", 20.0, 0.002));
    for (std::size_t t = 0; t < horizon; ++t) s.load.push_back(DistributionSpec::point(8.0));
    return s;
}

} // namespace ges::testing
