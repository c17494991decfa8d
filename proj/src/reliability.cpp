#include "gesdispatch/reliability.hpp"

#include "gesdispatch/error.hpp"

#include <algorithm>
#include <cmath>

namespace ges {

namespace {

constexpr double kViolationTol = 1e-9;
constexpr int kMaxResample = 100;
constexpr double kUnderPenalty = 1.3;
constexpr double kOverPenalty = 0.3;

struct Kahan {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// Precomputed sampler of one bound: anchor(u) = diu + (phys - diu) g(1-u),
// bound(u) = anchor + (comfort - anchor) H(u).
struct BoundSampler {
    double diu = 0.0;
    double phys = 0.0;
    double comfort = 0.0;
    std::size_t g_key = 0;
    bool h_zero = true;
    bool h_lognormal = true;
    double h_mu = 0.0;
    double h_sigma = 0.0;
    DistributionSpec h;
};

struct GKey {
    double mu = 0.0;
    double sigma = 0.0;
    double phi_lo = 0.0;
    double phi_hi = 1.0;
};

class Sampler {
public:
    explicit Sampler(const PracticalModel& m) : m_(m) {
        cells_.resize(m.units * m.horizon * 2);
        for (std::size_t i = 0; i < m.units; ++i)
            for (std::size_t side = 0; side < 2; ++side)
                for (std::size_t t = 0; t < m.horizon; ++t) {
                    const DduGeometry& geo = m.geometry[i][side][t];
                    BoundSampler& b = cell(i, side, t);
                    b.diu = geo.diu;
                    b.phys = geo.phys;
                    b.comfort = geo.comfort;
                    const DduSpec& spec = m.ddu[i];
                    const double mu_g = geo.mu_g;
                    b.g_key = key_of(mu_g, spec.sigma_g);
                    const double hm = m.h_mean[i][side][t];
                    b.h_zero = !(hm > 1e-12);
                    if (!b.h_zero) {
                        b.h = h_distribution(hm, spec);
                        b.h_lognormal = b.h.family == Family::Lognormal;
                        b.h_mu = b.h.mu;
                        b.h_sigma = b.h.sigma;
                    }
                }
        g_values_.resize(keys_.size());
        crossed_everywhere_.assign(m.units * m.horizon, -1);
    }

    std::size_t units() const { return m_.units; }
    std::size_t horizon() const { return m_.horizon; }

    // Prepares the shared quantities of behavioral level u.
    void set_level(double u) {
        u_ = u;
        z_ = standard_normal_quantile(u);
        for (std::size_t k = 0; k < keys_.size(); ++k) g_values_[k] = g_at(keys_[k], 1.0 - u);
    }

    double bound(std::size_t i, std::size_t side, std::size_t t) const {
        const BoundSampler& b = cells_[(i * 2 + side) * m_.horizon + t];
        return value(b, g_values_[b.g_key], u_, z_);
    }

    // Bound at an individual level, used when a pair is resampled.
    double bound_at(std::size_t i, std::size_t side, std::size_t t, double u) const {
        const BoundSampler& b = cells_[(i * 2 + side) * m_.horizon + t];
        return value(b, g_at(keys_[b.g_key], 1.0 - u), u, standard_normal_quantile(u));
    }

    // True when the pair crosses at every level of a fine grid, so resampling cannot help.
    bool always_crossed(std::size_t i, std::size_t t) {
        signed char& c = crossed_everywhere_[i * m_.horizon + t];
        if (c < 0) {
            c = 1;
            constexpr int kGrid = 2001;
            for (int k = 0; k < kGrid && c; ++k) {
                const double u = (k + 0.5) / kGrid;
                if (bound_at(i, 0, t, u) >= bound_at(i, 1, t, u)) c = 0;
            }
        }
        return c == 1;
    }

private:
    BoundSampler& cell(std::size_t i, std::size_t side, std::size_t t) {
        return cells_[(i * 2 + side) * m_.horizon + t];
    }

    std::size_t key_of(double mu, double sigma) {
        for (std::size_t k = 0; k < keys_.size(); ++k)
            if (keys_[k].mu == mu && keys_[k].sigma == sigma) return k;
        GKey k;
        k.mu = mu;
        k.sigma = sigma;
        k.phi_lo = standard_normal_cdf((0.0 - mu) / sigma);
        k.phi_hi = standard_normal_cdf((1.0 - mu) / sigma);
        keys_.push_back(k);
        return keys_.size() - 1;
    }

    static double g_at(const GKey& k, double level) {
        const double p = k.phi_lo + level * (k.phi_hi - k.phi_lo);
        return std::clamp(k.mu + k.sigma * standard_normal_quantile(std::clamp(p, 1e-300, 1.0 - 1e-16)), 0.0, 1.0);
    }

    static double value(const BoundSampler& b, double g, double u, double z) {
        const double anchor = b.diu + (b.phys - b.diu) * g;
        double h = 0.0;
        if (!b.h_zero) h = b.h_lognormal ? std::exp(b.h_mu + b.h_sigma * z) : quantile(b.h, u);
        return anchor + (b.comfort - anchor) * h;
    }

    const PracticalModel& m_;
    std::vector<BoundSampler> cells_;
    std::vector<GKey> keys_;
    std::vector<double> g_values_;
    std::vector<signed char> crossed_everywhere_;
    double u_ = 0.5;
    double z_ = 0.0;
};

// Realizes every (upper, lower) pair of draw s, resampling crossed pairs.
void realize_draw(Sampler& smp, std::uint64_t seed, std::size_t s, double* up, double* lo,
                  std::size_t& crossings, std::size_t& clipped) {
    const std::size_t T = smp.horizon();
    for (std::size_t i = 0; i < smp.units(); ++i)
        for (std::size_t t = 0; t < T; ++t) {
            double a = smp.bound(i, 0, t);
            double b = smp.bound(i, 1, t);
            if (b > a) {
                ++crossings;
                if (smp.always_crossed(i, t)) {
                    ++clipped;
                    up[i * T + t] = lo[i * T + t] = 0.5 * (a + b);
                    continue;
                }
                Rng rng(derive_seed(seed, {0x5eedc0deULL, s, i, t}));
                int k = 0;
                for (; k < kMaxResample && b > a; ++k) {
                    const double u = rng.uniform();
                    a = smp.bound_at(i, 0, t, u);
                    b = smp.bound_at(i, 1, t, u);
                }
                if (b > a) {
                    ++clipped;
                    a = b = 0.5 * (a + b);
                }
            }
            up[i * T + t] = a;
            lo[i * T + t] = b;
        }
}

std::vector<Series> realized_soc(const DispatchStrategy& strategy, const std::vector<GesParams>& params) {
    std::vector<Series> soc;
    for (std::size_t i = 0; i < strategy.schedules.size(); ++i)
        soc.push_back(simulate_soc(strategy.schedules[i].p_c, strategy.schedules[i].p_d, params[i]));
    return soc;
}

class Accumulator {
public:
    Accumulator(const DispatchStrategy& strategy, const std::vector<Series>& soc, const std::vector<double>& capacity)
        : soc_(soc), capacity_(capacity), units_(strategy.schedules.size()), horizon_(strategy.horizon()) {
        if (capacity.size() != units_ || soc.size() != units_)
            throw Error(ErrorKind::DimensionMismatch, "capacity list does not match the strategy");
        erns_.resize(horizon_);
        over_.resize(horizon_);
        under_.resize(horizon_);
        freq_.assign(units_, std::vector<std::size_t>(horizon_, 0));
    }

    void add(const double* up, const double* lo) {
        bool any = false;
        for (std::size_t t = 0; t < horizon_; ++t) {
            double over = 0.0, under = 0.0;
            for (std::size_t i = 0; i < units_; ++i) {
                const double x = soc_[i][t + 1];
                const double a = up[i * horizon_ + t];
                const double b = lo[i * horizon_ + t];
                if (x > a + kViolationTol) {
                    over += (x - a) * capacity_[i];
                    ++freq_[i][t];
                    any = true;
                } else if (x < b - kViolationTol) {
                    under += (b - x) * capacity_[i];
                    ++freq_[i][t];
                    any = true;
                }
            }
            over_[t].add(over);
            under_[t].add(under);
            erns_[t].add(over - under);
        }
        if (any) ++lorp_hits_;
        ++draws_;
    }

    ReliabilityReport report() const {
        ReliabilityReport r;
        r.draws = draws_;
        if (draws_ == 0) return r;
        const double n = static_cast<double>(draws_);
        r.lorp = static_cast<double>(lorp_hits_) / n;
        r.lorp_stderr = std::sqrt(r.lorp * (1.0 - r.lorp) / n);
        r.erns.resize(horizon_);
        r.over_energy.resize(horizon_);
        r.under_energy.resize(horizon_);
        Kahan tot, abs_tot;
        for (std::size_t t = 0; t < horizon_; ++t) {
            r.erns[t] = erns_[t].sum / n;
            r.over_energy[t] = over_[t].sum / n;
            r.under_energy[t] = under_[t].sum / n;
            tot.add(r.erns[t]);
            abs_tot.add(r.over_energy[t] + r.under_energy[t]);
        }
        r.erns_total = tot.sum;
        r.erns_abs_total = abs_tot.sum;
        r.violation_freq.assign(units_, Series(horizon_, 0.0));
        for (std::size_t i = 0; i < units_; ++i)
            for (std::size_t t = 0; t < horizon_; ++t) r.violation_freq[i][t] = static_cast<double>(freq_[i][t]) / n;
        return r;
    }

private:
    const std::vector<Series>& soc_;
    const std::vector<double>& capacity_;
    std::size_t units_;
    std::size_t horizon_;
    std::vector<Kahan> erns_, over_, under_;
    std::vector<std::vector<std::size_t>> freq_;
    std::size_t lorp_hits_ = 0;
    std::size_t draws_ = 0;
};

std::vector<Series> batch_soc(const DispatchStrategy& strategy) {
    std::vector<Series> soc;
    for (const auto& s : strategy.schedules) soc.push_back(s.soc);
    return soc;
}

void check_strategy(const DispatchStrategy& strategy, const ScenarioBundle& scn) {
    if (strategy.schedules.size() != scn.units.size())
        throw Error(ErrorKind::DimensionMismatch, "strategy has " + std::to_string(strategy.schedules.size()) +
                                                      " units, scenario has " + std::to_string(scn.units.size()));
    if (strategy.horizon() != scn.horizon)
        throw Error(ErrorKind::DimensionMismatch, "strategy horizon does not match the scenario");
    for (std::size_t i = 0; i < scn.units.size(); ++i)
        if (strategy.unit_ids[i] != scn.units[i].device.unit_id)
            throw Error(ErrorKind::DimensionMismatch,
                        "strategy unit " + strategy.unit_ids[i] + " does not match " + scn.units[i].device.unit_id);
}

} // namespace

PracticalModel practical_model(const DispatchStrategy& strategy, const ScenarioBundle& scn, const BoundStats& stats) {
    check_strategy(strategy, scn);
    const auto units = prepare_units(scn, ModelMode::M3, &stats);
    const auto params = mean_params(scn);
    std::vector<DduSpec> ddu;
    for (const auto& u : scn.units) ddu.push_back(u.ddu);
    PracticalModel m;
    // Realized trajectories follow the mean dynamics, whatever model planned them.
    DispatchStrategy realized = strategy;
    const auto soc = realized_soc(strategy, params);
    for (std::size_t i = 0; i < soc.size(); ++i) realized.schedules[i].soc = soc[i];
    const auto rd = strategy_discomfort(realized, params, ddu);
    m.soc = soc;

    m.units = units.size();
    m.horizon = scn.horizon;
    m.ddu = ddu;
    m.geometry.resize(m.units);
    m.h_mean.resize(m.units);
    for (std::size_t i = 0; i < m.units; ++i) {
        m.capacity.push_back(params[i].capacity);
        for (std::size_t side = 0; side < 2; ++side) {
            const BoundSide bs = side == 0 ? BoundSide::Upper : BoundSide::Lower;
            auto& geo = m.geometry[i][side];
            auto& hm = m.h_mean[i][side];
            for (std::size_t t = 0; t < m.horizon; ++t) {
                geo.push_back(ddu_geometry(units[i], t, bs, scn.gamma));
                hm.push_back(units[i].ddu.beta(bs) * rd[i][t]);
            }
        }
    }
    return m;
}

RealizationBatch realize_practical_bounds(const PracticalModel& model, std::size_t draws, std::uint64_t seed) {
    RealizationBatch b;
    b.draws = draws;
    b.units = model.units;
    b.horizon = model.horizon;
    b.seed = seed;
    b.soc = model.soc;
    b.upper.resize(draws * model.units * model.horizon);
    b.lower.resize(b.upper.size());
    Sampler smp(model);
    Rng rng(derive_seed(seed, {hash_string("behavior")}));
    const std::size_t stride = model.units * model.horizon;
    for (std::size_t s = 0; s < draws; ++s) {
        const double u = rng.uniform();
        b.behavior.push_back(u);
        smp.set_level(u);
        realize_draw(smp, seed, s, b.upper.data() + s * stride, b.lower.data() + s * stride, b.crossings, b.clipped);
    }
    return b;
}

RealizationBatch realize_practical_bounds(const DispatchStrategy& strategy, const ScenarioBundle& scn,
                                          const BoundStats& stats, std::size_t draws, std::uint64_t seed) {
    return realize_practical_bounds(practical_model(strategy, scn, stats), draws, seed);
}

ReliabilityReport compute_lorp_erns(const DispatchStrategy& strategy, const RealizationBatch& batch,
                                    const std::vector<double>& capacity) {
    if (batch.units != strategy.schedules.size() || batch.horizon != strategy.horizon())
        throw Error(ErrorKind::DimensionMismatch, "realization batch does not match the strategy");
    const auto soc = batch.soc.empty() ? batch_soc(strategy) : batch.soc;
    Accumulator acc(strategy, soc, capacity);
    const std::size_t stride = batch.units * batch.horizon;
    for (std::size_t s = 0; s < batch.draws; ++s) acc.add(batch.upper.data() + s * stride, batch.lower.data() + s * stride);
    ReliabilityReport r = acc.report();
    r.seed = batch.seed;
    r.crossings = batch.crossings;
    r.clipped = batch.clipped;
    r.cost_da = strategy.objective;
    return r;
}

double penalty_cost(const ReliabilityReport& report, const ScenarioBundle& scn) {
    if (report.over_energy.size() != scn.horizon || report.under_energy.size() != scn.horizon)
        throw Error(ErrorKind::DimensionMismatch, "report horizon does not match the scenario");
    if (scn.tou_price.size() != 1 && scn.tou_price.size() != scn.horizon)
        throw Error(ErrorKind::DimensionMismatch, "ToU price does not match the horizon");
    Kahan c;
    for (std::size_t t = 0; t < scn.horizon; ++t) {
        const double price = scn.tou_price[scn.tou_price.size() == 1 ? 0 : t];
        c.add(price * (kUnderPenalty * report.under_energy[t] + kOverPenalty * report.over_energy[t]));
    }
    return c.sum;
}

double penalty_cost(const DispatchStrategy& strategy, const RealizationBatch& batch, const ScenarioBundle& scn,
                    const std::vector<double>& capacity) {
    return penalty_cost(compute_lorp_erns(strategy, batch, capacity), scn);
}

ReliabilityReport evaluate_reliability(const DispatchStrategy& strategy, const ScenarioBundle& scn,
                                       const BoundStats& stats, std::size_t draws, std::uint64_t seed) {
    if (draws == 0) throw Error(ErrorKind::InvalidConfig, "at least one realization is required");
    const PracticalModel model = practical_model(strategy, scn, stats);
    Accumulator acc(strategy, model.soc, model.capacity);
    Sampler smp(model);
    Rng rng(derive_seed(seed, {hash_string("behavior")}));
    std::vector<double> up(model.units * model.horizon), lo(up.size());
    std::size_t crossings = 0, clipped = 0;
    for (std::size_t s = 0; s < draws; ++s) {
        smp.set_level(rng.uniform());
        realize_draw(smp, seed, s, up.data(), lo.data(), crossings, clipped);
        acc.add(up.data(), lo.data());
    }
    ReliabilityReport r = acc.report();
    r.gamma = scn.gamma;
    r.seed = seed;
    r.crossings = crossings;
    r.clipped = clipped;
    r.cost_da = strategy.objective;
    r.cost_rt = penalty_cost(r, scn);
    r.cost_tc = r.cost_da + r.cost_rt;
    return r;
}

DiuRowReport diu_row_violations(const DispatchStrategy& strategy, const ScenarioBundle& scn, std::size_t draws,
                                std::uint64_t seed, double tol) {
    check_strategy(strategy, scn);
    if (draws == 0) throw Error(ErrorKind::InvalidConfig, "at least one realization is required");
    const std::size_t T = scn.horizon;
    const std::size_t N = scn.units.size();
    // counts[i][kind][t], kinds: pc, pd, soc_lo, soc_hi
    std::vector<std::array<std::vector<std::size_t>, 4>> counts(N);
    for (auto& c : counts)
        for (auto& v : c) v.assign(T, 0);
    std::vector<std::size_t> balance(T, 0);

    for (std::size_t i = 0; i < N; ++i) {
        const auto& um = scn.units[i];
        const auto& sch = strategy.schedules[i];
        Rng rng(derive_seed(seed, {hash_string(um.device.unit_id)}));
        for (std::size_t s = 0; s < draws; ++s) {
            const GesParams p = map_device_to_ges(draw_device(um.device, um.uncertainty, rng), scn.dt, T);
            for (std::size_t t = 0; t < T; ++t) {
                if (sch.p_c[t] > p.p_c_max[t] + tol) ++counts[i][0][t];
                if (sch.p_d[t] > p.p_d_max[t] + tol) ++counts[i][1][t];
                if (sch.soc[t + 1] < p.soc_lo[t] - tol) ++counts[i][2][t];
                if (sch.soc[t + 1] > p.soc_hi[t] + tol) ++counts[i][3][t];
            }
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        double net = strategy.grid_import[t];
        for (const auto& sch : strategy.schedules) net += sch.p_d[t] - sch.p_c[t];
        Rng load_rng(derive_seed(seed, {hash_string("load"), t}));
        std::vector<Rng> res_rng;
        for (const auto& name : scn.res_names) res_rng.emplace_back(derive_seed(seed, {hash_string("res:" + name), t}));
        for (std::size_t s = 0; s < draws; ++s) {
            double need = load_rng.draw(scn.load[t]);
            for (std::size_t r = 0; r < scn.res.size(); ++r) need -= res_rng[r].draw(scn.res[r][t]);
            if (net < need - tol) ++balance[t];
        }
    }

    DiuRowReport rep;
    rep.draws = draws;
    const double n = static_cast<double>(draws);
    const char* names[4] = {"pc_max", "pd_max", "soc_lo", "soc_hi"};
    auto push = [&](const std::string& name, std::size_t count, double gamma) {
        RowFrequency f;
        f.row = name;
        f.frequency = static_cast<double>(count) / n;
        f.gamma = gamma;
        const double se = std::sqrt(gamma * (1.0 - gamma) / n);
        rep.max_excess = std::max(rep.max_excess, (f.frequency - gamma) / se);
        rep.rows.push_back(f);
    };
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t t = 0; t < T; ++t)
                push(std::string(names[k]) + "[" + scn.units[i].device.unit_id + "," + std::to_string(t) + "]",
                     counts[i][k][t], scn.gamma);
    for (std::size_t t = 0; t < T; ++t) push("balance[" + std::to_string(t) + "]", balance[t], scn.balance_gamma());
    return rep;
}

ContractionSummary contraction_summary(const PracticalModel& model) {
    ContractionSummary c;
    Kahan up, lo;
    std::size_t n = 0;
    for (std::size_t i = 0; i < model.units; ++i)
        for (std::size_t t = 0; t < model.horizon; ++t) {
            const auto& hm = model.h_mean[i];
            up.add(model.geometry[i][0][t].delta * mean(h_distribution(hm[0][t], model.ddu[i])));
            lo.add(model.geometry[i][1][t].delta * mean(h_distribution(hm[1][t], model.ddu[i])));
            ++n;
        }
    if (n == 0) return c;
    c.upper = up.sum / static_cast<double>(n);
    c.lower = lo.sum / static_cast<double>(n);
    c.mean = 0.5 * (c.upper + c.lower);
    return c;
}

} // namespace ges
