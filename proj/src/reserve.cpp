#include "gesdispatch/reserve.hpp"

#include "gesdispatch/error.hpp"

#include <cmath>

namespace ges {

double required_reliability(double p_on, double gamma) {
    if (!(p_on >= 0.0 && p_on < 1.0))
        throw Error(ErrorKind::InvalidProbability, "on-state probability must lie in [0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidProbability, "gamma must lie in (0, 1)");
    return std::max(0.0, 1.0 - gamma / (1.0 - p_on));
}

double reserve_price(double reliability, double a, double b) { return a * std::pow(reliability, b); }

void validate(const ReserveSpec& spec) {
    std::vector<std::string> issues;
    if (!(spec.lower >= 0.0)) issues.push_back("reserve lower bound must be nonnegative");
    if (!(spec.lower <= spec.upper)) issues.push_back("reserve lower bound exceeds upper bound");
    if (!(spec.a >= 0.0)) issues.push_back("reserve price coefficient a must be nonnegative");
    if (!(spec.b >= 0.0)) issues.push_back("reserve price exponent b must be nonnegative");
    if (!(spec.ramp_up >= 0.0) || !(spec.ramp_dn >= 0.0)) issues.push_back("reserve ramp rates must be nonnegative");
    if (spec.s1_price && !(*spec.s1_price >= 0.0)) issues.push_back("S1 reserve price must be nonnegative");
    if (!issues.empty()) throw Error(ErrorKind::InvalidSpec, "invalid reserve specification", issues);
}

namespace {

constexpr double kReserveTieBreak = 1e-6;

bool eligible(const UnitLp& u, std::size_t t) { return !u.on_prob.empty() && u.on_prob[t] < 1.0; }

} // namespace

std::vector<Series> reserve_prices(const std::vector<UnitLp>& units, const ReserveSpec& spec, double gamma) {
    std::vector<Series> out;
    for (const auto& u : units) {
        const std::size_t T = u.pd_hi.size();
        Series p(T, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            if (!eligible(u, t)) continue;
            if (spec.mode == ReserveMode::S1_Deterministic)
                p[t] = spec.s1_price.value_or(spec.a);
            else
                p[t] = reserve_price(required_reliability(u.on_prob[t], gamma), spec.a, spec.b);
        }
        out.push_back(std::move(p));
    }
    return out;
}

void add_reserve(DispatchLp& dlp, const ScenarioBundle& scn, const ReserveSpec& spec) {
    validate(spec);
    if (spec.mode == ReserveMode::None) return;
    bool any_on_prob = false;
    for (const auto& u : scn.units) any_on_prob = any_on_prob || !u.device.on_prob.empty();
    if (!any_on_prob) throw Error(ErrorKind::MissingOnProb, "reserve dispatch needs on-state probabilities");

    const std::size_t T = scn.horizon;
    const double dt = scn.dt;
    LpProblem& lp = dlp.lp;
    dlp.reserve_price = reserve_prices(dlp.units, spec, scn.gamma);
    dlp.ges_weight.assign(dlp.units.size(), Series(T, 1.0));
    dlp.reserve.assign(dlp.units.size(), {});
    for (std::size_t i = 0; i < dlp.units.size(); ++i) {
        const UnitLp& u = dlp.units[i];
        const UnitVars& v = dlp.vars[i];
        const std::string& id = u.unit_id;
        for (std::size_t t = 0; t < T; ++t) {
            const bool ok = eligible(u, t);
            // The substitution row implies rs <= pd_hi; stating it as a bound keeps the interior nonempty.
            const double hi = ok ? std::min(std::max(spec.lower, u.reserve_upper), std::max(spec.lower, u.pd_hi[t])) : 0.0;
            const double lo = ok ? spec.lower : 0.0;
            // The small reward selects the largest reserve among cost-optimal schedules, which
            // is otherwise not unique when reserve is free and the balance is slack.
            const std::size_t rs = lp.add_var("rs[" + id + "," + std::to_string(t) + "]", lo, hi,
                                              (dlp.reserve_price[i][t] - kReserveTieBreak) * dt);
            dlp.reserve[i].push_back(rs);
            lp.add_coef(dlp.balance_rows[t], rs, 1.0);
            if (!ok) continue;
            // Incentive payments only accrue while the unit is on.
            dlp.ges_weight[i][t] = u.on_prob[t];
            lp.cost[v.pc[t]] *= u.on_prob[t];
            lp.cost[v.pd[t]] *= u.on_prob[t];
            if (!(u.pd_hi[t] > 0.0) || !scn.in_window(t)) continue;
            const std::size_t r = lp.add_row("rs_sub[" + id + "," + std::to_string(t) + "]", RowSense::LE, u.pd_hi[t]);
            lp.add_coef(r, v.pd[t], 1.0);
            lp.add_coef(r, rs, 1.0);
        }
        for (std::size_t t = 1; t < T; ++t) {
            const std::size_t a = dlp.reserve[i][t], b = dlp.reserve[i][t - 1];
            if (std::isfinite(spec.ramp_up)) {
                const std::size_t r = lp.add_row("rs_ramp_up[" + id + "," + std::to_string(t) + "]", RowSense::LE, spec.ramp_up);
                lp.add_coef(r, a, 1.0);
                lp.add_coef(r, b, -1.0);
            }
            if (std::isfinite(spec.ramp_dn)) {
                const std::size_t r = lp.add_row("rs_ramp_dn[" + id + "," + std::to_string(t) + "]", RowSense::LE, spec.ramp_dn);
                lp.add_coef(r, b, 1.0);
                lp.add_coef(r, a, -1.0);
            }
        }
    }
}

DispatchStrategy solve_with_reserve(const ScenarioBundle& scn, const BoundStats& stats, const ReserveSpec& spec,
                                    const SolveConfig& cfg) {
    if (spec.mode == ReserveMode::None) throw Error(ErrorKind::InvalidConfig, "reserve mode is None");
    DispatchLp dlp;
    switch (cfg.mode) {
    case ModelMode::M1:
        dlp = build_dispatch_lp(scn, prepare_units(scn, ModelMode::M1, nullptr),
                                balance_limits(scn, ModelMode::M1, nullptr), nullptr);
        break;
    case ModelMode::M2:
        dlp = build_cco_diu(scn, stats);
        break;
    case ModelMode::M3:
        dlp = build_cco_ddu(scn, stats,
                            uniform_f_inv(scn.units.size(), scn.horizon, cantelli_bound(cfg.shape, scn.gamma)));
        break;
    }
    add_reserve(dlp, scn, spec);
    DispatchStrategy s = solve_dispatch_lp(scn, dlp, cfg.lp);
    s.meta.mode = cfg.mode;
    s.meta.reform = Reform::R1;
    s.meta.shape = to_string(cfg.shape);
    return s;
}

} // namespace ges
