#include "gesdispatch/ges_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ges {

const char* to_string(DeviceKind kind) {
    switch (kind) {
    case DeviceKind::BES: return "BES";
    case DeviceKind::TCL_IVA: return "TCL_IVA";
    case DeviceKind::TCL_FFA: return "TCL_FFA";
    case DeviceKind::EV: return "EV";
    }
    return "BES";
}

DeviceKind device_kind_from_string(const std::string& s) {
    if (s == "BES") return DeviceKind::BES;
    if (s == "TCL_IVA" || s == "TCL") return DeviceKind::TCL_IVA;
    if (s == "TCL_FFA") return DeviceKind::TCL_FFA;
    if (s == "EV") return DeviceKind::EV;
    throw Error(ErrorKind::ParseError, "unknown device kind '" + s + "'");
}

const char* to_string(ConstraintId id) {
    switch (id) {
    case ConstraintId::RampUp: return "RampUp";
    case ConstraintId::RampDown: return "RampDown";
    case ConstraintId::SocUpper: return "SocUpper";
    case ConstraintId::SocLower: return "SocLower";
    case ConstraintId::EnergySustainability: return "EnergySustainability";
    case ConstraintId::ChargeBound: return "PowerBound(charge)";
    case ConstraintId::DischargeBound: return "PowerBound(discharge)";
    case ConstraintId::NegativePower: return "NegativePower";
    case ConstraintId::Recursion: return "Recursion";
    case ConstraintId::Complementarity: return "Complementarity";
    }
    return "Unknown";
}

namespace {

// Broadcasts a length-1 series over the horizon; any other length must match.
Series expand(const Series& s, std::size_t horizon, const std::string& what, const std::string& unit) {
    if (s.size() == horizon) return s;
    if (s.size() == 1) return Series(horizon, s[0]);
    throw Error(ErrorKind::InvalidDevice,
                "unit " + unit + ": series '" + what + "' has length " + std::to_string(s.size()) +
                    ", expected 1 or " + std::to_string(horizon));
}

void require(bool cond, const std::string& unit, const std::string& msg) {
    if (!cond) throw Error(ErrorKind::InvalidDevice, "unit " + unit + ": " + msg);
}

GesParams map_tcl(const DeviceDescription& dev, const ThermalParams& th, double dt, std::size_t T) {
    const std::string& id = dev.unit_id;
    require(th.resistance > 0 && th.capacitance > 0 && th.cop > 0, id, "R, C and K must be positive");
    require(th.p_min <= th.p_max, id, "P_min > P_max");
    require(th.temp_min < th.temp_max, id, "temp_min must be below temp_max");
    require(th.deadband >= 0, id, "negative deadband");
    Series lo = expand(th.comfort_lo, T, "comfort_lo", id);
    Series hi = expand(th.comfort_hi, T, "comfort_hi", id);
    Series tout = expand(th.outdoor_temp, T, "outdoor_temp", id);
    Series pb = expand(th.baseline_power, T, "baseline_power", id);
    for (std::size_t t = 0; t < T; ++t) {
        require(lo[t] < hi[t], id, "comfort band empty at t=" + std::to_string(t));
        require(lo[t] >= th.temp_min - 1e-12 && hi[t] <= th.temp_max + 1e-12, id,
                "comfort band outside [temp_min, temp_max] at t=" + std::to_string(t));
    }

    GesParams p;
    p.unit_id = id;
    p.kind = dev.kind;
    p.dt = dt;
    const double span = th.temp_max - th.temp_min;
    const double eps = tcl_self_discharge(th.resistance, th.capacitance, dt);
    p.self_discharge = eps;
    p.capacity = dt * span / (th.cop * th.resistance * eps);
    if (!std::isfinite(p.capacity) || p.capacity <= 0)
        throw Error(ErrorKind::NonFiniteResult, "unit " + id + ": TCL capacity is not finite");
    p.eta_c = 1.0;
    p.eta_d = 1.0;
    p.p_c_max.resize(T);
    p.p_d_max.resize(T);
    p.soc_lo.resize(T);
    p.soc_hi.resize(T);
    p.alpha.resize(T);
    p.soc_baseline.resize(T);
    p.soc_baseline_avg.resize(T);
    p.deadband.assign(T, th.deadband / span);
    const double kr = th.cop * th.resistance;
    for (std::size_t t = 0; t < T; ++t) {
        p.p_c_max[t] = std::max(th.p_max - pb[t], 0.0);
        p.p_d_max[t] = std::max(pb[t] - th.p_min, 0.0);
        p.soc_lo[t] = tcl_soc(hi[t], th.temp_max, th.temp_min);
        p.soc_hi[t] = tcl_soc(lo[t], th.temp_max, th.temp_min);
        // Equilibrium indoor temperature under baseline power: T_out - K R P^B.
        const double socb = (th.temp_max - tout[t] + kr * pb[t]) / span;
        p.soc_baseline[t] = socb;
        p.soc_baseline_avg[t] = socb;
        p.alpha[t] = eps * socb;
    }
    p.soc_init = th.initial_temp ? tcl_soc(*th.initial_temp, th.temp_max, th.temp_min) : p.soc_baseline[0];
    return p;
}

GesParams map_storage(const DeviceDescription& dev, const StorageParams& st, double dt, std::size_t T) {
    const std::string& id = dev.unit_id;
    require(st.capacity > 0, id, "capacity must be positive");
    require(st.eta_c > 0 && st.eta_c <= 1 && st.eta_d > 0 && st.eta_d <= 1, id, "efficiencies must lie in (0, 1]");
    require(st.self_discharge >= 0 && st.self_discharge < 1, id, "self-discharge must lie in [0, 1)");
    require(st.p_c_rated >= 0 && st.p_d_rated >= 0, id, "negative power rating");
    require(st.deadband >= 0, id, "negative deadband");

    GesParams p;
    p.unit_id = id;
    p.kind = dev.kind;
    p.dt = dt;
    p.capacity = st.capacity;
    p.eta_c = st.eta_c;
    p.eta_d = st.eta_d;
    p.self_discharge = st.self_discharge;
    p.soc_lo = st.soc_lo.empty() ? Series(T, dev.soc_phys_lo) : expand(st.soc_lo, T, "soc_lo", id);
    p.soc_hi = st.soc_hi.empty() ? Series(T, dev.soc_phys_hi) : expand(st.soc_hi, T, "soc_hi", id);
    p.p_c_max.assign(T, st.p_c_rated);
    p.p_d_max.assign(T, st.p_d_rated);
    p.alpha.assign(T, 0.0);
    if (dev.kind == DeviceKind::EV) {
        Series bc = st.baseline_charge.empty() ? Series(T, 0.0) : expand(st.baseline_charge, T, "baseline_charge", id);
        Series bd = st.baseline_discharge.empty() ? Series(T, 0.0)
                                                  : expand(st.baseline_discharge, T, "baseline_discharge", id);
        Series ds = st.baseline_dsoc.empty() ? Series(T, 0.0) : expand(st.baseline_dsoc, T, "baseline_dsoc", id);
        for (std::size_t t = 0; t < T; ++t) {
            p.p_c_max[t] = std::max(st.p_c_rated - bc[t], 0.0);
            p.p_d_max[t] = std::max(st.p_d_rated - bd[t], 0.0);
            p.alpha[t] = ds[t];
        }
    }
    p.soc_init = st.soc_init;
    p.soc_baseline =
        st.baseline_soc.empty() ? Series(T, st.soc_init) : expand(st.baseline_soc, T, "baseline_soc", id);
    p.soc_baseline_avg = p.soc_baseline;
    p.deadband.assign(T, st.deadband);
    return p;
}

} // namespace

double tcl_soc(double temp_in, double temp_max, double temp_min) {
    return (temp_max - temp_in) / (temp_max - temp_min);
}

double tcl_self_discharge(double resistance, double capacitance, double dt) {
    return -std::expm1(-dt / (resistance * capacitance));
}

GesParams map_device_to_ges(const DeviceDescription& dev, double dt, std::size_t horizon) {
    if (!(dt > 0)) throw Error(ErrorKind::InvalidDevice, "dt must be positive");
    if (horizon == 0) throw Error(ErrorKind::InvalidDevice, "horizon must be positive");
    if (!(dev.soc_phys_lo >= 0 && dev.soc_phys_lo < dev.soc_phys_hi && dev.soc_phys_hi <= 1))
        throw Error(ErrorKind::InvalidDevice, "unit " + dev.unit_id + ": physical SoC bounds must satisfy 0 <= lo < hi <= 1");
    if (!(dev.soc_ramp_up >= 0 && dev.soc_ramp_dn >= 0))
        throw Error(ErrorKind::InvalidDevice, "unit " + dev.unit_id + ": negative SoC ramp limit");

    GesParams p;
    if (is_tcl(dev.kind)) {
        const auto* th = std::get_if<ThermalParams>(&dev.physics);
        if (!th) throw Error(ErrorKind::InvalidDevice, "unit " + dev.unit_id + ": TCL without thermal parameters");
        p = map_tcl(dev, *th, dt, horizon);
    } else {
        const auto* st = std::get_if<StorageParams>(&dev.physics);
        if (!st) throw Error(ErrorKind::InvalidDevice, "unit " + dev.unit_id + ": storage parameters missing");
        p = map_storage(dev, *st, dt, horizon);
    }
    p.soc_phys_lo = dev.soc_phys_lo;
    p.soc_phys_hi = dev.soc_phys_hi;
    p.soc_ramp_up = dev.soc_ramp_up;
    p.soc_ramp_dn = dev.soc_ramp_dn;
    for (std::size_t t = 0; t < horizon; ++t) {
        p.soc_lo[t] = std::clamp(p.soc_lo[t], p.soc_phys_lo, p.soc_phys_hi);
        p.soc_hi[t] = std::clamp(p.soc_hi[t], p.soc_phys_lo, p.soc_phys_hi);
        if (p.soc_lo[t] > p.soc_hi[t])
            throw Error(ErrorKind::InvalidDevice,
                        "unit " + dev.unit_id + ": SoC bounds cross at t=" + std::to_string(t));
    }
    if (dev.on_prob.empty()) {
        p.on_prob.assign(horizon, 1.0);
    } else {
        p.on_prob = expand(dev.on_prob, horizon, "on_prob", dev.unit_id);
        for (double q : p.on_prob)
            if (!(q >= 0 && q <= 1))
                throw Error(ErrorKind::InvalidDevice, "unit " + dev.unit_id + ": on_prob outside [0, 1]");
    }
    return p;
}

std::vector<std::string> validate(const GesParams& p) {
    std::vector<std::string> out;
    const std::size_t T = p.horizon();
    auto bad = [&](const std::string& m) { out.push_back("unit " + p.unit_id + ": " + m); };
    for (const auto* s : {&p.p_d_max, &p.soc_lo, &p.soc_hi, &p.alpha, &p.soc_baseline, &p.soc_baseline_avg,
                          &p.deadband, &p.on_prob})
        if (s->size() != T) {
            bad("series length mismatch");
            return out;
        }
    if (!(p.capacity > 0)) bad("capacity must be positive");
    if (!(p.dt > 0)) bad("dt must be positive");
    if (!(p.eta_c > 0 && p.eta_c <= 1 && p.eta_d > 0 && p.eta_d <= 1)) bad("efficiency outside (0, 1]");
    if (!(p.self_discharge >= 0 && p.self_discharge < 1)) bad("self-discharge outside [0, 1)");
    if (!(p.soc_ramp_up >= 0 && p.soc_ramp_dn >= 0)) bad("negative ramp limit");
    if (!(p.soc_phys_lo >= 0 && p.soc_phys_lo <= p.soc_phys_hi && p.soc_phys_hi <= 1)) bad("physical bounds invalid");
    for (std::size_t t = 0; t < T; ++t) {
        std::ostringstream at;
        at << " at t=" << t;
        if (!(p.soc_phys_lo <= p.soc_lo[t] && p.soc_lo[t] <= p.soc_hi[t] && p.soc_hi[t] <= p.soc_phys_hi))
            bad("SoC bounds out of order" + at.str());
        if (!(p.p_c_max[t] >= 0 && p.p_d_max[t] >= 0)) bad("negative power rating" + at.str());
        if (!(p.on_prob[t] >= 0 && p.on_prob[t] <= 1)) bad("on_prob outside [0, 1]" + at.str());
        if (!std::isfinite(p.alpha[t])) bad("alpha not finite" + at.str());
    }
    return out;
}

UnitSchedule make_schedule(std::size_t horizon, double soc_init) {
    UnitSchedule s;
    s.p_c.assign(horizon, 0.0);
    s.p_d.assign(horizon, 0.0);
    s.soc.assign(horizon + 1, soc_init);
    return s;
}

double step_soc(double soc, double p_c, double p_d, const GesParams& params, std::size_t t) {
    const double S = params.capacity;
    return (1.0 - params.self_discharge) * soc + params.eta_c * p_c * params.dt / S -
           p_d * params.dt / (params.eta_d * S) + params.alpha[t];
}

Series simulate_soc(const Series& p_c, const Series& p_d, const GesParams& params) {
    const std::size_t T = params.horizon();
    if (p_c.size() != T || p_d.size() != T) throw Error(ErrorKind::LengthMismatch, "schedule horizon mismatch");
    Series soc(T + 1);
    soc[0] = params.soc_init;
    for (std::size_t t = 0; t < T; ++t) soc[t + 1] = step_soc(soc[t], p_c[t], p_d[t], params, t);
    return soc;
}

FeasibilityResult check_feasibility(const UnitSchedule& sched, const GesParams& params, double tol) {
    const std::size_t T = params.horizon();
    if (sched.p_c.size() != T || sched.p_d.size() != T || sched.soc.size() != T + 1)
        throw Error(ErrorKind::LengthMismatch, "schedule and parameters have different horizons");
    FeasibilityResult r;
    auto add = [&](ConstraintId id, std::size_t t, double mag) { r.violations.push_back({id, t, mag}); };
    for (std::size_t t = 0; t < T; ++t) {
        const double pc = sched.p_c[t], pd = sched.p_d[t];
        if (pc < -tol) add(ConstraintId::NegativePower, t, -pc);
        if (pd < -tol) add(ConstraintId::NegativePower, t, -pd);
        if (pc > params.p_c_max[t] + tol) add(ConstraintId::ChargeBound, t, pc - params.p_c_max[t]);
        if (pd > params.p_d_max[t] + tol) add(ConstraintId::DischargeBound, t, pd - params.p_d_max[t]);
        if (pc * pd > tol) r.warnings.push_back({ConstraintId::Complementarity, t, pc * pd});

        const double s0 = sched.soc[t], s1 = sched.soc[t + 1];
        const double diff = s1 - s0;
        if (diff > params.soc_ramp_up + tol) add(ConstraintId::RampUp, t, diff - params.soc_ramp_up);
        if (-diff > params.soc_ramp_dn + tol) add(ConstraintId::RampDown, t, -diff - params.soc_ramp_dn);
        if (s1 > params.soc_hi[t] + tol) add(ConstraintId::SocUpper, t + 1, s1 - params.soc_hi[t]);
        if (s1 < params.soc_lo[t] - tol) add(ConstraintId::SocLower, t + 1, params.soc_lo[t] - s1);
        const double expect = step_soc(s0, pc, pd, params, t);
        if (std::abs(expect - s1) > tol) add(ConstraintId::Recursion, t, std::abs(expect - s1));
    }
    const double drift = sched.soc[T] - sched.soc[0];
    if (std::abs(drift) > tol) add(ConstraintId::EnergySustainability, T, std::abs(drift));
    return r;
}

} // namespace ges
