#include "gesdispatch/dispatch.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace ges {

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Series broadcast(const Series& s, std::size_t T, const std::string& what) {
    if (s.size() == T) return s;
    if (s.size() == 1) return Series(T, s[0]);
    throw Error(ErrorKind::LengthMismatch,
                what + " has " + std::to_string(s.size()) + " entries, expected 1 or " + std::to_string(T));
}

template <class T>
const T& at_step(const std::vector<T>& v, std::size_t t) {
    return v.size() == 1 ? v[0] : v[t];
}

double average(const Series& s) {
    double a = 0.0;
    for (double x : s) a += x;
    return s.empty() ? 0.0 : a / static_cast<double>(s.size());
}

std::string key(const std::string& id, std::size_t t) { return id + "," + std::to_string(t); }

} // namespace

const char* to_string(ModelMode m) {
    switch (m) {
    case ModelMode::M1: return "M1";
    case ModelMode::M2: return "M2";
    case ModelMode::M3: return "M3";
    }
    return "?";
}

const char* to_string(Reform r) { return r == Reform::R1 ? "R1" : "R2"; }

ModelMode parse_model_mode(const std::string& s) {
    const auto l = lower(s);
    if (l == "m1") return ModelMode::M1;
    if (l == "m2") return ModelMode::M2;
    if (l == "m3") return ModelMode::M3;
    throw Error(ErrorKind::InvalidConfig, "unknown model mode '" + s + "'");
}

Reform parse_reform(const std::string& s) {
    const auto l = lower(s);
    if (l == "r1") return Reform::R1;
    if (l == "r2") return Reform::R2;
    throw Error(ErrorKind::InvalidConfig, "unknown reformulation '" + s + "'");
}

const char* to_string(ReserveMode m) {
    switch (m) {
    case ReserveMode::None: return "none";
    case ReserveMode::S1_Deterministic: return "S1";
    case ReserveMode::S2_Probabilistic: return "S2";
    }
    return "?";
}

ReserveMode parse_reserve_mode(const std::string& s) {
    const auto l = lower(s);
    if (l == "none" || l.empty()) return ReserveMode::None;
    if (l == "s1" || l == "deterministic") return ReserveMode::S1_Deterministic;
    if (l == "s2" || l == "probabilistic") return ReserveMode::S2_Probabilistic;
    throw Error(ErrorKind::InvalidConfig, "unknown reserve mode '" + s + "'");
}

bool ScenarioBundle::in_window(std::size_t t) const {
    return dispatch_window.empty() ||
           std::find(dispatch_window.begin(), dispatch_window.end(), t) != dispatch_window.end();
}

std::vector<std::string> validation_issues(const ScenarioBundle& scn) {
    std::vector<std::string> out;
    const std::size_t T = scn.horizon;
    auto len_ok = [&](std::size_t n) { return n == 1 || n == T; };
    if (T == 0) out.push_back("horizon must be positive");
    if (!(scn.dt > 0)) out.push_back("dt must be positive");
    if (scn.units.empty()) out.push_back("EmptyFleet: scenario has no units");
    if (!(scn.gamma > 0 && scn.gamma < 1)) out.push_back("gamma must lie in (0, 1)");
    if (!(scn.balance_gamma() > 0 && scn.balance_gamma() < 1)) out.push_back("gamma_balance must lie in (0, 1)");
    if (!(scn.grid_cap > 0)) out.push_back("grid capacity must be positive");
    if (!len_ok(scn.tou_price.size())) out.push_back("tou_price length mismatch");
    else
        for (std::size_t t = 0; t < scn.tou_price.size(); ++t)
            if (!(scn.tou_price[t] > 0)) out.push_back("step " + std::to_string(t) + ": ToU price must be positive");
    if (!len_ok(scn.load.size())) out.push_back("load series length mismatch");
    for (const auto& d : scn.load) {
        try {
            validate(d);
        } catch (const Error& e) {
            out.push_back(std::string("load: ") + e.what());
        }
    }
    if (scn.res.size() != scn.res_names.size()) out.push_back("RES names and series disagree");
    for (std::size_t r = 0; r < scn.res.size(); ++r) {
        if (!len_ok(scn.res[r].size())) out.push_back("RES unit " + std::to_string(r) + " length mismatch");
        for (const auto& d : scn.res[r]) {
            try {
                validate(d);
            } catch (const Error& e) {
                out.push_back("RES: " + std::string(e.what()));
            }
        }
    }
    for (std::size_t t : scn.dispatch_window)
        if (t >= T) out.push_back("dispatch window step " + std::to_string(t) + " outside the horizon");
    const auto& rs = scn.reserve;
    if (!(rs.lower <= rs.upper)) out.push_back("reserve lower bound exceeds upper bound");
    if (!(rs.a >= 0) || !(rs.b >= 0)) out.push_back("reserve price coefficients must be nonnegative");

    std::vector<std::string> ids;
    for (const auto& u : scn.units) {
        const std::string& id = u.device.unit_id;
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) out.push_back("duplicate unit id " + id);
        ids.push_back(id);
        if (!len_ok(u.price_c.size()) || !len_ok(u.price_d.size())) {
            out.push_back("unit " + id + ": price series length mismatch");
        } else {
            for (std::size_t t = 0; t < T; ++t) {
                const double pc = at_step(u.price_c, t), pd = at_step(u.price_d, t);
                if (!(pc < pd))
                    out.push_back("unit " + id + " step " + std::to_string(t) + ": charging price " + fmt(pc) +
                                  " must be below discharging price " + fmt(pd));
                if (!(pc >= 0)) out.push_back("unit " + id + " step " + std::to_string(t) + ": negative price");
            }
        }
        try {
            validate(u.uncertainty, u.device);
            const GesParams p = map_device_to_ges(mean_device(u.device, u.uncertainty), scn.dt, T);
            for (const auto& issue : validate(p)) out.push_back("unit " + id + ": " + issue);
        } catch (const Error& e) {
            out.push_back("unit " + id + ": " + e.what());
        }
        try {
            validate(u.ddu);
        } catch (const Error& e) {
            out.push_back("unit " + id + ": " + e.what());
        }
        for (double p : u.device.on_prob)
            if (!(p >= 0 && p <= 1)) {
                out.push_back("unit " + id + ": on-state probability outside [0, 1]");
                break;
            }
    }
    return out;
}

void require_valid(const ScenarioBundle& scn) {
    auto issues = validation_issues(scn);
    if (issues.empty()) return;
    throw Error(ErrorKind::ValidationError,
                "scenario '" + scn.name + "' has " + std::to_string(issues.size()) + " validation error(s)", issues);
}

std::vector<GesParams> mean_params(const ScenarioBundle& scn) {
    std::vector<GesParams> out;
    out.reserve(scn.units.size());
    for (const auto& u : scn.units)
        out.push_back(map_device_to_ges(mean_device(u.device, u.uncertainty), scn.dt, scn.horizon));
    return out;
}

BoundStats compute_bound_stats(const ScenarioBundle& scn, std::size_t n, std::uint64_t seed,
                               const PropagationOptions& opts) {
    BoundStats s;
    s.gamma = scn.gamma;
    s.gamma_balance = scn.balance_gamma();
    const std::size_t T = scn.horizon;
    for (const auto& u : scn.units)
        s.units.push_back(propagate_diu(u.uncertainty, u.device, scn.dt, T, n,
                                        derive_seed(seed, {hash_string(u.device.unit_id)}), scn.gamma, opts));
    for (std::size_t t = 0; t < T; ++t)
        s.load.push_back(distribution_stat(at_step(scn.load, t), n, derive_seed(seed, {hash_string("load"), t}),
                                           s.gamma_balance, opts));
    for (std::size_t r = 0; r < scn.res.size(); ++r) {
        std::vector<BoundStat> v;
        for (std::size_t t = 0; t < T; ++t)
            v.push_back(distribution_stat(at_step(scn.res[r], t), n,
                                          derive_seed(seed, {hash_string("res:" + scn.res_names[r]), t}),
                                          s.gamma_balance, opts));
        s.res.push_back(std::move(v));
    }
    return s;
}

std::vector<UnitLp> prepare_units(const ScenarioBundle& scn, ModelMode mode, const BoundStats* stats) {
    const std::size_t T = scn.horizon;
    const auto params = mean_params(scn);
    if (mode != ModelMode::M1) {
        if (!stats) throw Error(ErrorKind::InvalidConfig, "chance-constrained modes need bound statistics");
        if (stats->units.size() != scn.units.size())
            throw Error(ErrorKind::DimensionMismatch, "bound statistics do not match the fleet");
    }
    std::vector<UnitLp> out;
    std::vector<std::string> empty;
    for (std::size_t i = 0; i < scn.units.size(); ++i) {
        const auto& um = scn.units[i];
        UnitLp u;
        u.unit_id = um.device.unit_id;
        u.nominal = params[i];
        u.price_c = broadcast(um.price_c, T, "charging price of " + u.unit_id);
        u.price_d = broadcast(um.price_d, T, "discharging price of " + u.unit_id);
        u.on_prob = u.nominal.on_prob;
        u.ddu = um.ddu;
        u.reserve_upper = um.reserve_upper.value_or(scn.reserve.upper);
        const GesParams& p = u.nominal;
        if (mode == ModelMode::M1) {
            u.pc_hi.assign(T, average(p.p_c_max));
            u.pd_hi.assign(T, average(p.p_d_max));
            u.soc_lo.assign(T, p.soc_phys_lo);
            u.soc_hi.assign(T, p.soc_phys_hi);
            u.alpha.assign(T, average(p.alpha));
        } else {
            const UnitBoundStats& st = stats->units[i];
            if (st.unit_id != u.unit_id)
                throw Error(ErrorKind::DimensionMismatch, "bound statistics for " + st.unit_id + " used for " + u.unit_id);
            u.pc_hi.resize(T);
            u.pd_hi.resize(T);
            u.soc_lo.resize(T);
            u.soc_hi.resize(T);
            u.alpha.resize(T);
            for (std::size_t t = 0; t < T; ++t) {
                u.pc_hi[t] = std::max(0.0, st.at(BoundKind::PcMax, t).upper_type_limit());
                u.pd_hi[t] = std::max(0.0, st.at(BoundKind::PdMax, t).upper_type_limit());
                u.soc_lo[t] = std::max(p.soc_phys_lo, st.at(BoundKind::SocLo, t).lower_type_limit());
                u.soc_hi[t] = std::min(p.soc_phys_hi, st.at(BoundKind::SocHi, t).upper_type_limit());
                u.alpha[t] = st.at(BoundKind::Alpha, t).mu;
                if (u.soc_lo[t] > u.soc_hi[t] + 1e-12)
                    empty.push_back("unit " + u.unit_id + " step " + std::to_string(t) + ": tightened SoC interval [" +
                                    fmt(u.soc_lo[t]) + ", " + fmt(u.soc_hi[t]) + "] is empty");
            }
        }
        out.push_back(std::move(u));
    }
    if (!empty.empty())
        throw Error(ErrorKind::InfeasibleBounds, std::to_string(empty.size()) + " tightened interval(s) are empty", empty);
    return out;
}

BalanceLimits balance_limits(const ScenarioBundle& scn, ModelMode mode, const BoundStats* stats) {
    const std::size_t T = scn.horizon;
    BalanceLimits b;
    b.load.assign(T, 0.0);
    b.res.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        if (mode == ModelMode::M1 || !stats) {
            b.load[t] = mean(at_step(scn.load, t));
            for (const auto& r : scn.res) b.res[t] += mean(at_step(r, t));
        } else {
            b.load[t] = stats->load.at(t).lower_type_limit();
            for (const auto& r : stats->res) b.res[t] += std::max(0.0, r.at(t).upper_type_limit());
        }
    }
    return b;
}

DduGeometry ddu_geometry(const UnitLp& u, std::size_t t, BoundSide side, double gamma) {
    const GesParams& p = u.nominal;
    DduGeometry g;
    const double lo = u.soc_lo[t], hi = u.soc_hi[t];
    const double half = 0.5 * p.deadband[t];
    const double c_bar = u.ddu.c_bar;
    if (side == BoundSide::Upper) {
        g.diu = hi;
        g.phys = std::max(p.soc_phys_hi, hi);
        g.comfort = std::clamp(p.soc_baseline_avg[t] + half, lo, hi);
        g.mu_g = u.price_c[t] / c_bar;
        g.q_g = expansion_quantile(g.mu_g, u.ddu.sigma_g, u.ddu.g_level(gamma));
        g.anchor = g.diu + (g.phys - g.diu) * g.q_g;
        g.delta = g.anchor - g.comfort;
    } else {
        g.diu = lo;
        g.phys = std::min(p.soc_phys_lo, lo);
        g.comfort = std::clamp(p.soc_baseline_avg[t] - half, lo, hi);
        g.mu_g = u.price_d[t] / c_bar;
        g.q_g = expansion_quantile(g.mu_g, u.ddu.sigma_g, u.ddu.g_level(gamma));
        g.anchor = g.diu + (g.phys - g.diu) * g.q_g;
        g.delta = g.comfort - g.anchor;
    }
    return g;
}

FInv uniform_f_inv(std::size_t units, std::size_t horizon, double value) {
    FInv f(units);
    for (auto& a : f) a = {Series(horizon, value), Series(horizon, value)};
    return f;
}

ObjectiveTerms build_objective(const ScenarioBundle& scn) {
    ObjectiveTerms o;
    o.dt = scn.dt;
    o.grid_price = broadcast(scn.tou_price, scn.horizon, "ToU price");
    for (const auto& u : scn.units) {
        o.price_c.push_back(broadcast(u.price_c, scn.horizon, "charging price"));
        o.price_d.push_back(broadcast(u.price_d, scn.horizon, "discharging price"));
    }
    return o;
}

double evaluate_objective(const ObjectiveTerms& terms, const std::vector<UnitSchedule>& schedules,
                          const Series& grid_import) {
    if (schedules.size() != terms.price_c.size() || grid_import.size() != terms.grid_price.size())
        throw Error(ErrorKind::DimensionMismatch, "schedules do not match the objective terms");
    double total = 0.0;
    for (std::size_t t = 0; t < grid_import.size(); ++t) {
        for (std::size_t i = 0; i < schedules.size(); ++i)
            total += (terms.price_d[i][t] * schedules[i].p_d[t] + terms.price_c[i][t] * schedules[i].p_c[t]) * terms.dt;
        total += terms.grid_price[t] * grid_import[t] * terms.dt;
    }
    return total;
}

DispatchLp build_dispatch_lp(const ScenarioBundle& scn, std::vector<UnitLp> units, const BalanceLimits& bal,
                             const FInv* f_inv) {
    const std::size_t T = scn.horizon;
    const double dt = scn.dt;
    const Series grid_price = broadcast(scn.tou_price, T, "ToU price");
    DispatchLp d;
    d.has_ddu = f_inv != nullptr;
    if (f_inv && f_inv->size() != units.size())
        throw Error(ErrorKind::DimensionMismatch, "normalized quantiles do not match the fleet");
    LpProblem& lp = d.lp;

    // Coefficient signs first: a loosening discomfort term breaks the epigraph argument.
    if (f_inv) {
        std::vector<std::string> bad;
        for (const auto& u : units)
            for (std::size_t t = 0; t < T; ++t)
                for (auto side : {BoundSide::Upper, BoundSide::Lower}) {
                    const double coef = ddu_geometry(u, t, side, scn.gamma).delta * u.ddu.beta(side);
                    if (coef < -1e-12)
                        bad.push_back("unit " + u.unit_id + " step " + std::to_string(t) + " " +
                                      (side == BoundSide::Upper ? "upper" : "lower") + " coefficient " + fmt(coef));
                }
        if (!bad.empty())
            throw Error(ErrorKind::NonTighteningCoefficient, "discomfort would loosen SoC bound rows", bad);
    }

    d.vars.resize(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        const UnitLp& u = units[i];
        const GesParams& p = u.nominal;
        UnitVars& v = d.vars[i];
        const std::string& id = u.unit_id;
        for (std::size_t t = 0; t < T; ++t) {
            const bool on = scn.in_window(t);
            v.pc.push_back(lp.add_var("pc[" + key(id, t) + "]", 0.0, on ? u.pc_hi[t] : 0.0, u.price_c[t] * dt));
            v.pd.push_back(lp.add_var("pd[" + key(id, t) + "]", 0.0, on ? u.pd_hi[t] : 0.0, u.price_d[t] * dt));
        }
        v.soc.push_back(lp.add_var("soc[" + key(id, 0) + "]", p.soc_init, p.soc_init));
        for (std::size_t t = 0; t < T; ++t) {
            const double lo = f_inv ? p.soc_phys_lo : u.soc_lo[t];
            const double hi = f_inv ? p.soc_phys_hi : u.soc_hi[t];
            v.soc.push_back(lp.add_var("soc[" + key(id, t + 1) + "]", lo, hi));
        }
        const double keep = 1.0 - p.self_discharge;
        for (std::size_t t = 0; t < T; ++t) {
            const auto r = lp.add_row("rec[" + key(id, t) + "]", RowSense::EQ, u.alpha[t]);
            lp.add_coef(r, v.soc[t + 1], 1.0);
            lp.add_coef(r, v.soc[t], -keep);
            lp.add_coef(r, v.pc[t], -p.eta_c * dt / p.capacity);
            lp.add_coef(r, v.pd[t], dt / (p.eta_d * p.capacity));
            if (std::isfinite(p.soc_ramp_up)) {
                const auto ru = lp.add_row("ramp_up[" + key(id, t) + "]", RowSense::LE, p.soc_ramp_up);
                lp.add_coef(ru, v.soc[t + 1], 1.0);
                lp.add_coef(ru, v.soc[t], -1.0);
            }
            if (std::isfinite(p.soc_ramp_dn)) {
                const auto rdn = lp.add_row("ramp_dn[" + key(id, t) + "]", RowSense::GE, -p.soc_ramp_dn);
                lp.add_coef(rdn, v.soc[t + 1], 1.0);
                lp.add_coef(rdn, v.soc[t], -1.0);
            }
        }
        const auto sus = lp.add_row("sustain[" + id + "]", RowSense::EQ, 0.0);
        lp.add_coef(sus, v.soc[T], 1.0);
        lp.add_coef(sus, v.soc[0], -1.0);

        if (!f_inv) continue;
        const DduSpec& spec = u.ddu;
        const RdReference ref = rd_reference(p);
        const bool use_dev = spec.variant != DiscomfortVariant::F1_DisutilityOnly;
        const double lambda = use_dev ? spec.lambda : 1.0;
        double cum_max = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            if (ref.p_c_ref > 0) cum_max += u.pc_hi[t] / ref.p_c_ref;
            if (ref.p_d_ref > 0) cum_max += u.pd_hi[t] / ref.p_d_ref;
        }
        cum_max /= static_cast<double>(T);
        const double rd_cap = lambda * cum_max + (1.0 - lambda) * (p.soc_phys_hi - p.soc_phys_lo) + 1.0;
        for (std::size_t t = 0; t < T; ++t) {
            v.ci.push_back(lp.add_var("ci[" + key(id, t) + "]", 0.0, cum_max + 1.0));
            const auto r = lp.add_row("cum[" + key(id, t) + "]", RowSense::EQ, 0.0);
            lp.add_coef(r, v.ci[t], 1.0);
            if (t > 0) lp.add_coef(r, v.ci[t - 1], -1.0);
            if (ref.p_c_ref > 0) lp.add_coef(r, v.pc[t], -1.0 / (ref.p_c_ref * static_cast<double>(T)));
            if (ref.p_d_ref > 0) lp.add_coef(r, v.pd[t], -1.0 / (ref.p_d_ref * static_cast<double>(T)));
        }
        for (std::size_t t = 0; t < T; ++t) {
            v.rd.push_back(lp.add_var("rd[" + key(id, t) + "]", 0.0, rd_cap));
            const auto r = lp.add_row("rd_epi[" + key(id, t) + "]", RowSense::GE, 0.0);
            lp.add_coef(r, v.rd[t], 1.0);
            lp.add_coef(r, v.ci[t], -lambda);
            if (!use_dev) continue;
            v.dev.push_back(lp.add_var("dev[" + key(id, t) + "]", 0.0, p.soc_phys_hi - p.soc_phys_lo));
            lp.add_coef(r, v.dev[t], -(1.0 - lambda));
            const double avg = p.soc_baseline_avg[t];
            if (spec.variant == DiscomfortVariant::F2_DeadbandAbsolute) {
                const double half = 0.5 * p.deadband[t];
                const auto a = lp.add_row("dev_up[" + key(id, t) + "]", RowSense::GE, -avg - half);
                lp.add_coef(a, v.dev[t], 1.0);
                lp.add_coef(a, v.soc[t + 1], -1.0);
                const auto b = lp.add_row("dev_dn[" + key(id, t) + "]", RowSense::GE, avg - half);
                lp.add_coef(b, v.dev[t], 1.0);
                lp.add_coef(b, v.soc[t + 1], 1.0);
            } else {
                const auto b = lp.add_row("dev_dn[" + key(id, t) + "]", RowSense::GE, avg);
                lp.add_coef(b, v.dev[t], 1.0);
                lp.add_coef(b, v.soc[t + 1], 1.0);
            }
        }
        const auto& f = (*f_inv)[i];
        for (std::size_t t = 0; t < T; ++t) {
            const auto up = ddu_geometry(u, t, BoundSide::Upper, scn.gamma);
            const auto r_up = lp.add_row("ddu_up[" + key(id, t) + "]", RowSense::LE,
                                         up.anchor - f[0][t] * up.delta * spec.sigma_h);
            lp.add_coef(r_up, v.soc[t + 1], 1.0);
            lp.add_coef(r_up, v.rd[t], up.delta * spec.beta_up);
            const auto lo = ddu_geometry(u, t, BoundSide::Lower, scn.gamma);
            const auto r_lo = lp.add_row("ddu_lo[" + key(id, t) + "]", RowSense::GE,
                                         lo.anchor + f[1][t] * lo.delta * spec.sigma_h);
            lp.add_coef(r_lo, v.soc[t + 1], 1.0);
            lp.add_coef(r_lo, v.rd[t], -lo.delta * spec.beta_lo);
        }
    }

    for (std::size_t t = 0; t < T; ++t)
        d.grid.push_back(lp.add_var("grid[" + std::to_string(t) + "]", 0.0, scn.grid_cap, grid_price[t] * dt));
    for (std::size_t t = 0; t < T; ++t) {
        const auto r = lp.add_row("balance[" + std::to_string(t) + "]", RowSense::GE, bal.load[t] - bal.res[t]);
        lp.add_coef(r, d.grid[t], 1.0);
        for (const auto& v : d.vars) {
            lp.add_coef(r, v.pd[t], 1.0);
            lp.add_coef(r, v.pc[t], -1.0);
        }
        d.balance_rows.push_back(r);
    }
    d.units = std::move(units);
    return d;
}

DispatchLp build_cco_diu(const ScenarioBundle& scn, const BoundStats& stats) {
    return build_dispatch_lp(scn, prepare_units(scn, ModelMode::M2, &stats),
                             balance_limits(scn, ModelMode::M2, &stats), nullptr);
}

DispatchLp build_cco_ddu(const ScenarioBundle& scn, const BoundStats& stats, const FInv& f_inv) {
    return build_dispatch_lp(scn, prepare_units(scn, ModelMode::M3, &stats),
                             balance_limits(scn, ModelMode::M3, &stats), &f_inv);
}

double DispatchStrategy::discharge_energy(double dt) const {
    double e = 0.0;
    for (const auto& s : schedules)
        for (double x : s.p_d) e += x * dt;
    return e;
}

double DispatchStrategy::charge_energy(double dt) const {
    double e = 0.0;
    for (const auto& s : schedules)
        for (double x : s.p_c) e += x * dt;
    return e;
}

double DispatchStrategy::reserve_energy(double dt) const {
    double e = 0.0;
    for (const auto& s : reserve)
        for (double x : s) e += x * dt;
    return e;
}

DispatchStrategy solve_dispatch_lp(const ScenarioBundle& scn, const DispatchLp& dlp, const LpOptions& opts) {
    const LpSolution sol = solve_lp(dlp.lp, opts);
    if (sol.status == LpStatus::Infeasible)
        throw Error(ErrorKind::Infeasible, "dispatch program is infeasible", sol.certificate);
    if (sol.status == LpStatus::Unbounded) throw Error(ErrorKind::Unbounded, "dispatch program is unbounded");
    const std::size_t T = scn.horizon;
    const double dt = scn.dt;
    DispatchStrategy s;
    for (std::size_t i = 0; i < dlp.units.size(); ++i) {
        const UnitLp& u = dlp.units[i];
        const UnitVars& v = dlp.vars[i];
        UnitSchedule sch = make_schedule(T, u.nominal.soc_init);
        for (std::size_t t = 0; t < T; ++t) {
            sch.p_c[t] = std::max(0.0, sol.x[v.pc[t]]);
            sch.p_d[t] = std::max(0.0, sol.x[v.pd[t]]);
        }
        for (std::size_t t = 0; t <= T; ++t) sch.soc[t] = sol.x[v.soc[t]];
        s.rd.push_back(response_discomfort_series(sch, u.nominal, u.ddu));
        s.unit_ids.push_back(u.unit_id);
        s.schedules.push_back(std::move(sch));
        for (std::size_t t = 0; t < T; ++t) {
            const double w = dlp.ges_weight.empty() ? 1.0 : dlp.ges_weight[i][t];
            s.ges_cost += w * (u.price_c[t] * s.schedules.back().p_c[t] + u.price_d[t] * s.schedules.back().p_d[t]) * dt;
        }
        if (!dlp.reserve.empty()) {
            Series rs(T, 0.0);
            for (std::size_t t = 0; t < T; ++t) {
                rs[t] = std::max(0.0, sol.x[dlp.reserve[i][t]]);
                s.reserve_cost += dlp.reserve_price[i][t] * rs[t] * dt;
            }
            s.reserve.push_back(std::move(rs));
        }
    }
    const Series grid_price = broadcast(scn.tou_price, T, "ToU price");
    s.grid_import.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        s.grid_import[t] = std::clamp(sol.x[dlp.grid[t]], 0.0, scn.grid_cap);
        s.grid_cost += grid_price[t] * s.grid_import[t] * dt;
    }
    s.objective = s.ges_cost + s.grid_cost + s.reserve_cost;
    s.diagnostics.reserve(dlp.lp.num_rows());
    for (std::size_t r = 0; r < dlp.lp.num_rows(); ++r) {
        const LpRow& row = dlp.lp.rows[r];
        RowDiagnostic g;
        g.name = row.name;
        g.activity = sol.row_activity[r];
        g.dual = sol.row_dual[r];
        g.slack = row.sense == RowSense::GE ? g.activity - row.rhs : row.rhs - g.activity;
        s.diagnostics.push_back(std::move(g));
    }
    s.meta.lp_iterations = sol.iterations;
    s.meta.aggregated = dlp.units.size() == 1 && scn.units.size() > 1;
    return s;
}

SolveConfig default_config(const ScenarioBundle& scn) {
    SolveConfig c;
    c.mode = scn.mode;
    c.shape = scn.shape;
    return c;
}

namespace {

std::vector<UnitLp> maybe_aggregate(std::vector<UnitLp> units, const SolveConfig& cfg) {
    if (!cfg.aggregate || units.size() <= 1) return units;
    return {aggregate_units(units)};
}

DispatchStrategy finish(DispatchStrategy s, const SolveConfig& cfg, ModelMode mode, Reform reform) {
    s.meta.mode = mode;
    s.meta.reform = reform;
    s.meta.shape = to_string(cfg.shape);
    return s;
}

FInv robust_f(const std::vector<UnitLp>& units, std::size_t T, const SolveConfig& cfg, double gamma) {
    return uniform_f_inv(units.size(), T, cantelli_bound(cfg.shape, gamma));
}

} // namespace

DispatchStrategy solve_deterministic_m1(const ScenarioBundle& scn, const SolveConfig& cfg) {
    auto units = maybe_aggregate(prepare_units(scn, ModelMode::M1, nullptr), cfg);
    auto dlp = build_dispatch_lp(scn, std::move(units), balance_limits(scn, ModelMode::M1, nullptr), nullptr);
    return finish(solve_dispatch_lp(scn, dlp, cfg.lp), cfg, ModelMode::M1, Reform::R1);
}

DispatchStrategy solve_cco_diu(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg) {
    auto units = maybe_aggregate(prepare_units(scn, ModelMode::M2, &stats), cfg);
    auto dlp = build_dispatch_lp(scn, std::move(units), balance_limits(scn, ModelMode::M2, &stats), nullptr);
    return finish(solve_dispatch_lp(scn, dlp, cfg.lp), cfg, ModelMode::M2, Reform::R1);
}

DispatchStrategy robust_solve_r1(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg) {
    auto units = maybe_aggregate(prepare_units(scn, ModelMode::M3, &stats), cfg);
    const FInv f = robust_f(units, scn.horizon, cfg, scn.gamma);
    auto dlp = build_dispatch_lp(scn, std::move(units), balance_limits(scn, ModelMode::M3, &stats), &f);
    auto s = finish(solve_dispatch_lp(scn, dlp, cfg.lp), cfg, ModelMode::M3, Reform::R1);
    s.meta.iterations = 0;
    return s;
}

R2Result iterative_solve_r2(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg) {
    if (!(cfg.delta > 0)) throw Error(ErrorKind::InvalidConfig, "convergence tolerance must be positive");
    const int max_iter = cfg.limit_iterations ? std::min(cfg.max_iter, 2) : cfg.max_iter;
    if (max_iter < 1) throw Error(ErrorKind::InvalidConfig, "max_iter must be at least 1");
    const std::size_t T = scn.horizon;
    const auto units = maybe_aggregate(prepare_units(scn, ModelMode::M3, &stats), cfg);
    const BalanceLimits bal = balance_limits(scn, ModelMode::M3, &stats);
    FInv f = robust_f(units, T, cfg, scn.gamma);

    auto update = [&](const DispatchStrategy& s, double& max_delta) {
        FInv next = f;
        max_delta = 0.0;
        for (std::size_t i = 0; i < units.size(); ++i)
            for (std::size_t side = 0; side < 2; ++side) {
                const double beta = side == 0 ? units[i].ddu.beta_up : units[i].ddu.beta_lo;
                for (std::size_t t = 0; t < T; ++t) {
                    next[i][side][t] = h_normalized_quantile(beta * s.rd[i][t], units[i].ddu, scn.gamma);
                    max_delta = std::max(max_delta, std::abs(next[i][side][t] - f[i][side][t]));
                }
            }
        return next;
    };

    R2Result result;
    R2Result best;
    double best_delta = std::numeric_limits<double>::infinity();
    int lp_iters = 0;
    for (int k = 0; k <= max_iter; ++k) {
        auto dlp = build_dispatch_lp(scn, units, bal, &f);
        DispatchStrategy s = solve_dispatch_lp(scn, dlp, cfg.lp);
        lp_iters += s.meta.lp_iterations;
        double max_delta = 0.0;
        FInv next = update(s, max_delta);
        result.trace.push_back({k, s.objective, max_delta});
        s = finish(std::move(s), cfg, ModelMode::M3, Reform::R2);
        s.meta.iterations = k;
        s.meta.lp_iterations = lp_iters;
        if (k > 0 && max_delta < best_delta) {
            best_delta = max_delta;
            best.strategy = s;
        }
        if (k > 0 && max_delta <= cfg.delta) {
            s.trace = result.trace;
            result.strategy = std::move(s);
            result.converged = true;
            return result;
        }
        if (k == max_iter) {
            s.trace = result.trace;
            s.meta.converged = false;
            result.strategy = std::move(s);
            break;
        }
        f = std::move(next);
    }
    if (cfg.limit_iterations) return result;
    best.trace = result.trace;
    best.strategy.trace = result.trace;
    best.strategy.meta.converged = false;
    throw IterationLimitError("iterative reformulation did not converge within " + std::to_string(max_iter) +
                                  " iterations",
                              std::move(best));
}

DispatchStrategy solve(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg) {
    switch (cfg.mode) {
    case ModelMode::M1: return solve_deterministic_m1(scn, cfg);
    case ModelMode::M2: return solve_cco_diu(scn, stats, cfg);
    case ModelMode::M3:
        if (cfg.reform == Reform::R1 || cfg.robust_only) return robust_solve_r1(scn, stats, cfg);
        return iterative_solve_r2(scn, stats, cfg).strategy;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown model mode");
}

GesParams aggregate_fleet(const std::vector<GesParams>& units) {
    if (units.empty()) throw Error(ErrorKind::EmptyFleet, "cannot aggregate an empty fleet");
    if (units.size() == 1) return units[0];
    const std::size_t T = units[0].horizon();
    double S = 0.0;
    for (const auto& u : units) {
        if (u.horizon() != T) throw Error(ErrorKind::DimensionMismatch, "units have different horizons");
        S += u.capacity;
    }
    GesParams a;
    a.unit_id = "aggregate";
    a.kind = units[0].kind;
    a.dt = units[0].dt;
    a.capacity = S;
    a.eta_c = a.eta_d = a.self_discharge = a.soc_phys_lo = a.soc_phys_hi = a.soc_init = 0.0;
    a.soc_ramp_up = a.soc_ramp_dn = 0.0;
    for (auto* s : {&a.p_c_max, &a.p_d_max, &a.soc_lo, &a.soc_hi, &a.alpha, &a.soc_baseline, &a.soc_baseline_avg,
                    &a.deadband, &a.on_prob})
        s->assign(T, 0.0);
    for (const auto& u : units) {
        const double w = u.capacity / S;
        a.eta_c += w * u.eta_c;
        a.eta_d += w * u.eta_d;
        a.self_discharge += w * u.self_discharge;
        a.soc_phys_lo += w * u.soc_phys_lo;
        a.soc_phys_hi += w * u.soc_phys_hi;
        a.soc_init += w * u.soc_init;
        a.soc_ramp_up += w * u.soc_ramp_up;
        a.soc_ramp_dn += w * u.soc_ramp_dn;
        for (std::size_t t = 0; t < T; ++t) {
            a.p_c_max[t] += u.p_c_max[t];
            a.p_d_max[t] += u.p_d_max[t];
            a.soc_lo[t] += w * u.soc_lo[t];
            a.soc_hi[t] += w * u.soc_hi[t];
            a.alpha[t] += w * u.alpha[t];
            a.soc_baseline[t] += w * u.soc_baseline[t];
            a.soc_baseline_avg[t] += w * u.soc_baseline_avg[t];
            a.deadband[t] += w * u.deadband[t];
            a.on_prob[t] += w * u.on_prob[t];
        }
        if (u.kind != a.kind) a.kind = DeviceKind::BES;
    }
    return a;
}

UnitLp aggregate_units(const std::vector<UnitLp>& units) {
    if (units.empty()) throw Error(ErrorKind::EmptyFleet, "cannot aggregate an empty fleet");
    if (units.size() == 1) return units[0];
    std::vector<GesParams> nominal, limits;
    for (const auto& u : units) {
        nominal.push_back(u.nominal);
        GesParams l = u.nominal;
        l.p_c_max = u.pc_hi;
        l.p_d_max = u.pd_hi;
        l.soc_lo = u.soc_lo;
        l.soc_hi = u.soc_hi;
        l.alpha = u.alpha;
        limits.push_back(std::move(l));
    }
    UnitLp a;
    a.nominal = aggregate_fleet(nominal);
    const GesParams l = aggregate_fleet(limits);
    a.unit_id = a.nominal.unit_id;
    a.pc_hi = l.p_c_max;
    a.pd_hi = l.p_d_max;
    a.soc_lo = l.soc_lo;
    a.soc_hi = l.soc_hi;
    a.alpha = l.alpha;
    a.on_prob = a.nominal.on_prob;
    a.ddu = units[0].ddu;
    const std::size_t T = a.nominal.horizon();
    a.price_c.assign(T, 0.0);
    a.price_d.assign(T, 0.0);
    for (const auto& u : units) {
        const double w = u.nominal.capacity / a.nominal.capacity;
        for (std::size_t t = 0; t < T; ++t) {
            a.price_c[t] += w * u.price_c[t];
            a.price_d[t] += w * u.price_d[t];
        }
        a.reserve_upper += u.reserve_upper;
    }
    return a;
}

std::vector<Series> strategy_discomfort(const DispatchStrategy& s, const std::vector<GesParams>& params,
                                        const std::vector<DduSpec>& ddu) {
    if (params.size() != s.schedules.size() || ddu.size() != s.schedules.size())
        throw Error(ErrorKind::DimensionMismatch, "strategy and fleet sizes differ");
    std::vector<Series> out;
    for (std::size_t i = 0; i < s.schedules.size(); ++i)
        out.push_back(response_discomfort_series(s.schedules[i], params[i], ddu[i]));
    return out;
}

} // namespace ges
