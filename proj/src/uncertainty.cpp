#include "gesdispatch/uncertainty.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace ges {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::size_t nearest_rank(double level, std::size_t n) {
    const double dn = static_cast<double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(level * dn - 1e-9 * dn));
    return std::clamp<std::size_t>(rank, 1, n);
}

double normalized_student_t(double nu, double gamma) {
    if (gamma >= 1.0) return -kInf;
    const boost::math::students_t_distribution<double> t(nu);
    const double q = boost::math::quantile(boost::math::complement(t, gamma));
    return nu > 2.0 ? q * std::sqrt((nu - 2.0) / nu) : q;
}

} // namespace

// ---------------------------------------------------------------------------

std::string to_string(const ShapeClass& s) {
    switch (s.kind) {
    case ShapeClass::NoAssumption: return "NoAssumption";
    case ShapeClass::Symmetric: return "Symmetric";
    case ShapeClass::Unimodal: return "Unimodal";
    case ShapeClass::SymmetricUnimodal: return "SymmetricUnimodal";
    case ShapeClass::StudentT: {
        char buf[48];
        std::snprintf(buf, sizeof buf, "StudentT(%.17g)", s.nu);
        return buf;
    }
    case ShapeClass::Normal: return "Normal";
    }
    return "NoAssumption";
}

ShapeClass parse_shape_class(const std::string& text) {
    const std::string s = lower(text);
    if (s == "na" || s == "noassumption" || s == "no-assumption") return {ShapeClass::NoAssumption};
    if (s == "s" || s == "symmetric") return {ShapeClass::Symmetric};
    if (s == "u" || s == "unimodal") return {ShapeClass::Unimodal};
    if (s == "su" || s == "symmetricunimodal" || s == "symmetric-unimodal") return {ShapeClass::SymmetricUnimodal};
    if (s == "n" || s == "normal") return {ShapeClass::Normal};
    std::string digits;
    if (s.rfind("studentt(", 0) == 0 && s.back() == ')') digits = s.substr(9, s.size() - 10);
    else if (s.rfind("st", 0) == 0) digits = s.substr(2);
    else if (s.rfind("t", 0) == 0) digits = s.substr(1);
    if (!digits.empty()) {
        try {
            std::size_t pos = 0;
            const double nu = std::stod(digits, &pos);
            if (pos == digits.size() && nu > 0) return ShapeClass::student_t(nu);
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorKind::ParseError, "unknown shape class '" + text + "'");
}

double cantelli_bound(const ShapeClass& shape, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::InvalidGamma, "gamma must lie in (0, 1]");
    switch (shape.kind) {
    case ShapeClass::NoAssumption: return std::sqrt((1.0 - gamma) / gamma);
    case ShapeClass::Symmetric: return gamma < 0.5 ? std::sqrt(1.0 / (2.0 * gamma)) : 0.0;
    case ShapeClass::Unimodal:
        return gamma <= 1.0 / 6.0 ? std::sqrt((4.0 - 9.0 * gamma) / (9.0 * gamma))
                                  : std::sqrt((3.0 - 3.0 * gamma) / (1.0 + 3.0 * gamma));
    case ShapeClass::SymmetricUnimodal:
        if (gamma <= 1.0 / 6.0) return std::sqrt(2.0 / (9.0 * gamma));
        if (gamma <= 0.5) return std::sqrt(3.0) * (1.0 - 2.0 * gamma);
        return 0.0;
    case ShapeClass::StudentT:
        if (!(shape.nu > 0)) throw Error(ErrorKind::InvalidSpec, "Student-t shape needs nu > 0");
        return normalized_student_t(shape.nu, gamma);
    case ShapeClass::Normal: return gamma >= 1.0 ? -kInf : standard_normal_quantile(1.0 - gamma);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& tcl_param_names() {
    static const std::set<std::string> names = {"R",      "C",      "K",
                                                "temp_min", "temp_max", "p_min",
                                                "p_max",  "comfort_lo_offset", "comfort_hi_offset",
                                                "initial_temp"};
    return names;
}

const std::set<std::string>& storage_param_names() {
    static const std::set<std::string> names = {"capacity",  "eta_c",     "eta_d",         "self_discharge",
                                                "p_c_rated", "p_d_rated", "soc_lo_offset", "soc_hi_offset",
                                                "soc_init"};
    return names;
}

// Applies value v of parameter `name` to the device.
void apply_param(DeviceDescription& dev, const std::string& name, double v, std::size_t horizon) {
    if (auto* th = std::get_if<ThermalParams>(&dev.physics)) {
        if (name == "R") th->resistance = v;
        else if (name == "C") th->capacitance = v;
        else if (name == "K") th->cop = v;
        else if (name == "temp_min") th->temp_min = v;
        else if (name == "temp_max") th->temp_max = v;
        else if (name == "p_min") th->p_min = v;
        else if (name == "p_max") th->p_max = v;
        else if (name == "initial_temp") th->initial_temp = v;
        else if (name == "comfort_lo_offset") {
            for (auto& x : th->comfort_lo) x = std::clamp(x + v, th->temp_min, th->temp_max);
        } else if (name == "comfort_hi_offset") {
            for (auto& x : th->comfort_hi) x = std::clamp(x + v, th->temp_min, th->temp_max);
        }
        return;
    }
    auto& st = std::get<StorageParams>(dev.physics);
    if (name == "capacity") st.capacity = v;
    else if (name == "eta_c") st.eta_c = std::clamp(v, 1e-6, 1.0);
    else if (name == "eta_d") st.eta_d = std::clamp(v, 1e-6, 1.0);
    else if (name == "self_discharge") st.self_discharge = std::clamp(v, 0.0, 1.0 - 1e-9);
    else if (name == "p_c_rated") st.p_c_rated = std::max(v, 0.0);
    else if (name == "p_d_rated") st.p_d_rated = std::max(v, 0.0);
    else if (name == "soc_init") st.soc_init = v;
    else if (name == "soc_lo_offset" || name == "soc_hi_offset") {
        Series& s = name == "soc_lo_offset" ? st.soc_lo : st.soc_hi;
        if (s.empty()) s.assign(horizon, name == "soc_lo_offset" ? dev.soc_phys_lo : dev.soc_phys_hi);
        for (auto& x : s) x += v;
    }
}

void apply_baseline(DeviceDescription& dev, const std::vector<double>& values) {
    if (auto* th = std::get_if<ThermalParams>(&dev.physics)) {
        th->baseline_power = values;
    } else if (dev.kind == DeviceKind::EV) {
        std::get<StorageParams>(dev.physics).baseline_charge = values;
    }
}

// Keeps the two SoC offsets in the order they are applied by the mapping.
void finish_storage_bounds(DeviceDescription& dev) {
    if (auto* st = std::get_if<StorageParams>(&dev.physics)) {
        const std::size_t n = std::min(st->soc_lo.size(), st->soc_hi.size());
        for (std::size_t t = 0; t < n; ++t)
            if (st->soc_lo[t] > st->soc_hi[t]) st->soc_lo[t] = st->soc_hi[t] = 0.5 * (st->soc_lo[t] + st->soc_hi[t]);
    }
}

std::size_t series_horizon(const DeviceDescription& dev) {
    if (const auto* th = std::get_if<ThermalParams>(&dev.physics)) {
        return std::max({th->comfort_lo.size(), th->comfort_hi.size(), th->outdoor_temp.size(),
                         th->baseline_power.size()});
    }
    const auto& st = std::get<StorageParams>(dev.physics);
    return std::max({st.soc_lo.size(), st.soc_hi.size(), st.baseline_charge.size(), st.baseline_dsoc.size(),
                     std::size_t{1}});
}

} // namespace

void validate(const UnitUncertainty& unc, const DeviceDescription& dev) {
    const auto& names = is_tcl(dev.kind) ? tcl_param_names() : storage_param_names();
    for (const auto& [name, spec] : unc.params) {
        if (!names.count(name))
            throw Error(ErrorKind::InvalidSpec,
                        "unit " + dev.unit_id + ": parameter '" + name + "' is not uncertain for " + to_string(dev.kind));
        validate(spec);
    }
    for (const auto& spec : unc.baseline) validate(spec);
    if (!unc.baseline.empty() && dev.kind == DeviceKind::BES)
        throw Error(ErrorKind::InvalidSpec, "unit " + dev.unit_id + ": BES units have no baseline distribution");
}

DeviceDescription mean_device(const DeviceDescription& dev, const UnitUncertainty& unc) {
    DeviceDescription d = dev;
    const std::size_t T = series_horizon(dev);
    for (const auto& [name, spec] : unc.params) apply_param(d, name, mean(spec), T);
    if (!unc.baseline.empty()) {
        std::vector<double> v(unc.baseline.size());
        for (std::size_t t = 0; t < v.size(); ++t) v[t] = mean(unc.baseline[t]);
        apply_baseline(d, v);
    }
    finish_storage_bounds(d);
    return d;
}

DeviceDescription draw_device(const DeviceDescription& dev, const UnitUncertainty& unc, Rng& rng) {
    DeviceDescription d = dev;
    const std::size_t T = series_horizon(dev);
    // Fixed draw order: R, C, ... are drawn in key order, then baselines by step.
    for (const auto& [name, spec] : unc.params) apply_param(d, name, rng.draw(spec), T);
    if (!unc.baseline.empty()) {
        std::vector<double> v(unc.baseline.size());
        for (std::size_t t = 0; t < v.size(); ++t) v[t] = rng.draw(unc.baseline[t]);
        apply_baseline(d, v);
    }
    finish_storage_bounds(d);
    return d;
}

const char* to_string(BoundKind k) {
    switch (k) {
    case BoundKind::PcMax: return "p_c_max";
    case BoundKind::PdMax: return "p_d_max";
    case BoundKind::SocLo: return "soc_lo";
    case BoundKind::SocHi: return "soc_hi";
    case BoundKind::Alpha: return "alpha";
    case BoundKind::SocBaseline: return "soc_baseline";
    }
    return "unknown";
}

BoundStat summarize_sample(std::vector<double>& v, double gamma, std::uint64_t seed, double sigma_floor) {
    if (v.empty()) throw Error(ErrorKind::EmptySample, "cannot summarize an empty sample");
    BoundStat s;
    s.sample_count = v.size();
    s.seed = seed;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    if (*mn == *mx) {
        s.mu = *mn;
        return s;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mu = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    s.mu = mu;
    if (sd < sigma_floor) return s;
    s.sigma = sd;
    const std::size_t n = v.size();
    auto hi = v.begin() + static_cast<std::ptrdiff_t>(nearest_rank(1.0 - gamma, n) - 1);
    std::nth_element(v.begin(), hi, v.end());
    const double q_hi = *hi;
    auto lo = v.begin() + static_cast<std::ptrdiff_t>(nearest_rank(gamma, n) - 1);
    std::nth_element(v.begin(), lo, hi);
    const double q_lo = *lo;
    s.inv_cdf_hi = (q_hi - mu) / sd;
    s.inv_cdf_lo = (mu - q_lo) / sd;
    return s;
}

UnitBoundStats propagate_diu(const UnitUncertainty& unc, const DeviceDescription& dev, double dt,
                             std::size_t horizon, std::size_t n, std::uint64_t seed, double gamma,
                             const PropagationOptions& opts) {
    if (n < opts.min_samples)
        throw Error(ErrorKind::InvalidSpec, "sample count " + std::to_string(n) + " below the configured minimum " +
                                                std::to_string(opts.min_samples));
    if (!(gamma > 0 && gamma < 1)) throw Error(ErrorKind::InvalidGamma, "gamma must lie in (0, 1)");
    validate(unc, dev);
    std::array<std::vector<std::vector<double>>, kBoundKinds> values;
    for (auto& k : values) k.assign(horizon, std::vector<double>(n));
    Rng rng(seed);
    for (std::size_t s = 0; s < n; ++s) {
        GesParams p;
        try {
            p = map_device_to_ges(draw_device(dev, unc, rng), dt, horizon);
        } catch (const Error& e) {
            throw Error(ErrorKind::InvalidSpec, "unit " + dev.unit_id + ": parameter draw " + std::to_string(s) +
                                                    " is not a valid device (" + e.what() + ")");
        }
        for (std::size_t t = 0; t < horizon; ++t) {
            values[0][t][s] = p.p_c_max[t];
            values[1][t][s] = p.p_d_max[t];
            values[2][t][s] = p.soc_lo[t];
            values[3][t][s] = p.soc_hi[t];
            values[4][t][s] = p.alpha[t];
            values[5][t][s] = p.soc_baseline[t];
        }
    }
    UnitBoundStats out;
    out.unit_id = dev.unit_id;
    for (std::size_t k = 0; k < kBoundKinds; ++k) {
        out.kinds[k].resize(horizon);
        for (std::size_t t = 0; t < horizon; ++t)
            out.kinds[k][t] = summarize_sample(values[k][t], gamma, seed, opts.sigma_floor);
    }
    return out;
}

BoundStat distribution_stat(const DistributionSpec& spec, std::size_t n, std::uint64_t seed, double gamma,
                            const PropagationOptions& opts) {
    if (is_degenerate(spec)) {
        BoundStat s;
        s.mu = quantile(spec, 0.5);
        s.sample_count = n;
        s.seed = seed;
        return s;
    }
    // Exact moments and quantiles when the variance is finite; sampling otherwise.
    const double sd = stddev(spec);
    if (std::isfinite(sd) && sd > opts.sigma_floor) {
        if (!(gamma > 0 && gamma < 1)) throw Error(ErrorKind::InvalidGamma, "gamma must lie in (0, 1)");
        BoundStat s;
        s.mu = mean(spec);
        s.sigma = sd;
        s.inv_cdf_hi = (quantile(spec, 1.0 - gamma) - s.mu) / sd;
        s.inv_cdf_lo = (s.mu - quantile(spec, gamma)) / sd;
        s.sample_count = 0;
        s.seed = seed;
        return s;
    }
    auto v = sample(spec, n, seed);
    return summarize_sample(v, gamma, seed, opts.sigma_floor);
}

void apply_shape_class(BoundStats& stats, const ShapeClass& shape) {
    const double f = cantelli_bound(shape, stats.gamma);
    const double fb = cantelli_bound(shape, stats.gamma_balance);
    auto set = [](BoundStat& s, double v) {
        if (s.sigma > 0) s.inv_cdf_hi = s.inv_cdf_lo = v;
    };
    for (auto& u : stats.units)
        for (auto& k : u.kinds)
            for (auto& s : k) set(s, f);
    for (auto& s : stats.load) set(s, fb);
    for (auto& r : stats.res)
        for (auto& s : r) set(s, fb);
}

// ---------------------------------------------------------------------------

const char* to_string(HFamily f) { return f == HFamily::Lognormal ? "Lognormal" : "Beta"; }

const char* to_string(DiscomfortVariant v) {
    switch (v) {
    case DiscomfortVariant::F1_DisutilityOnly: return "F1";
    case DiscomfortVariant::F2_DeadbandAbsolute: return "F2";
    case DiscomfortVariant::F3_LinearOneSided: return "F3";
    }
    return "F2";
}

HFamily parse_h_family(const std::string& s) {
    const std::string l = lower(s);
    if (l == "lognormal") return HFamily::Lognormal;
    if (l == "beta") return HFamily::Beta;
    throw Error(ErrorKind::ParseError, "unknown h family '" + s + "'");
}

DiscomfortVariant parse_discomfort_variant(const std::string& s) {
    const std::string l = lower(s);
    if (l == "f1" || l == "f1_disutilityonly") return DiscomfortVariant::F1_DisutilityOnly;
    if (l == "f2" || l == "f2_deadbandabsolute") return DiscomfortVariant::F2_DeadbandAbsolute;
    if (l == "f3" || l == "f3_linearonesided") return DiscomfortVariant::F3_LinearOneSided;
    throw Error(ErrorKind::ParseError, "unknown discomfort variant '" + s + "'");
}

void validate(const DduSpec& d) {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidSpec, "DDU spec: " + m); };
    if (!(d.sigma_g > 0) || !(d.sigma_h > 0)) fail("sigma_g and sigma_h must be positive");
    if (!(d.beta_up >= 0 && d.beta_lo >= 0)) fail("discomfort-aversion factors must be nonnegative");
    if (!(d.lambda >= 0 && d.lambda <= 1)) fail("lambda must lie in [0, 1]");
    if (!(d.c_bar > 0)) fail("price normalizer must be positive");
    if (d.q_g_level && !(*d.q_g_level > 0 && *d.q_g_level < 1)) fail("q_g_level must lie in (0, 1)");
    if (!(d.beta_cap > 0)) fail("Beta cap must be positive");
}

double expansion_quantile(double mu_g, double sigma_g, double level) {
    return quantile(DistributionSpec::truncated_normal(mu_g, sigma_g, 0.0, 1.0), level);
}

DistributionSpec h_distribution(double m, const DduSpec& spec) {
    if (!(m > 1e-12)) return DistributionSpec::point(0.0);
    if (spec.h_family == HFamily::Lognormal) return DistributionSpec::lognormal_from_moments(m, spec.sigma_h);
    const double cap = spec.beta_cap;
    const double x = std::min(m, cap * (1.0 - 1e-6)) / cap;
    double v = (spec.sigma_h / cap) * (spec.sigma_h / cap);
    v = std::min(v, 0.99 * x * (1.0 - x));
    const double k = x * (1.0 - x) / v - 1.0;
    return DistributionSpec::beta_dist(x * k, (1.0 - x) * k, 0.0, cap);
}

double h_normalized_quantile(double m, const DduSpec& spec, double gamma) {
    if (!(m > 1e-12)) return 0.0;
    if (spec.h_family == HFamily::Lognormal) {
        const double s2 = std::log1p((spec.sigma_h / m) * (spec.sigma_h / m));
        const double q = lognormal_inverse_cdf_closed_form(std::log(m) - 0.5 * s2, std::sqrt(s2), 1.0 - gamma);
        return (q - m) / spec.sigma_h;
    }
    return (quantile(h_distribution(m, spec), 1.0 - gamma) - m) / spec.sigma_h;
}

DduBound ddu_bound_distribution(BoundSide side, double diu, double phys, double comfort, double price, double rd,
                                const DduSpec& spec, double gamma) {
    const double tol = 1e-12;
    const bool ordered = side == BoundSide::Upper ? (comfort <= diu + tol && diu <= phys + tol)
                                                  : (phys <= diu + tol && diu <= comfort + tol);
    if (!ordered)
        throw Error(ErrorKind::OrderingViolation,
                    std::string(side == BoundSide::Upper ? "upper" : "lower") +
                        " DDU bound requires comfort/DIU/physical bounds in order");
    if (!(rd >= 0)) throw Error(ErrorKind::OrderingViolation, "response discomfort must be nonnegative");
    DduBound b;
    b.q_g = expansion_quantile(price / spec.c_bar, spec.sigma_g, spec.g_level(gamma));
    b.anchor = diu + (phys - diu) * b.q_g;
    b.comfort = comfort;
    b.h = h_distribution(spec.beta(side) * rd, spec);
    b.mean = b.anchor + (comfort - b.anchor) * mean(b.h);
    b.sd = std::abs(comfort - b.anchor) * stddev(b.h);
    return b;
}

double lognormal_inverse_cdf_closed_form(double mu, double sigma, double level) {
    return std::exp(mu + std::sqrt(2.0 * sigma * sigma) * boost::math::erf_inv(2.0 * level - 1.0));
}

RdReference rd_reference(const GesParams& params) {
    RdReference r;
    const std::size_t T = params.horizon();
    if (T == 0) return r;
    for (std::size_t t = 0; t < T; ++t) {
        r.p_c_ref += params.p_c_max[t];
        r.p_d_ref += params.p_d_max[t];
    }
    r.p_c_ref /= static_cast<double>(T);
    r.p_d_ref /= static_cast<double>(T);
    return r;
}

namespace {

double discomfort_term(const UnitSchedule& sched, const GesParams& params, const DduSpec& spec, std::size_t t) {
    const double dev = sched.soc[t + 1] - params.soc_baseline_avg[t];
    switch (spec.variant) {
    case DiscomfortVariant::F1_DisutilityOnly: return 0.0;
    case DiscomfortVariant::F2_DeadbandAbsolute: return std::max(std::abs(dev) - 0.5 * params.deadband[t], 0.0);
    case DiscomfortVariant::F3_LinearOneSided: return std::max(-dev, 0.0);
    }
    return 0.0;
}

} // namespace

Series response_discomfort_series(const UnitSchedule& sched, const GesParams& params, const DduSpec& spec) {
    const std::size_t T = params.horizon();
    if (sched.p_c.size() != T || sched.p_d.size() != T || sched.soc.size() != T + 1)
        throw Error(ErrorKind::LengthMismatch, "schedule and parameters have different horizons");
    const RdReference ref = rd_reference(params);
    const double lambda = spec.variant == DiscomfortVariant::F1_DisutilityOnly ? 1.0 : spec.lambda;
    Series rd(T);
    double cum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        double step = 0.0;
        if (ref.p_c_ref > 0) step += sched.p_c[t] / ref.p_c_ref;
        if (ref.p_d_ref > 0) step += sched.p_d[t] / ref.p_d_ref;
        cum += step / static_cast<double>(T);
        rd[t] = lambda * cum + (1.0 - lambda) * discomfort_term(sched, params, spec, t);
    }
    return rd;
}

double response_discomfort(const UnitSchedule& sched, const GesParams& params, const DduSpec& spec, std::size_t t) {
    if (t >= params.horizon()) throw Error(ErrorKind::LengthMismatch, "step outside the horizon");
    return response_discomfort_series(sched, params, spec)[t];
}

} // namespace ges
