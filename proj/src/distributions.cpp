#include "gesdispatch/distributions.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace ges {

namespace bm = boost::math;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const bm::normal_distribution<double>& std_normal() {
    static const bm::normal_distribution<double> n(0.0, 1.0);
    return n;
}

double phi(double x) {
    if (!std::isfinite(x)) return 0.0;
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double upper_tail(double x) {
    if (x == kInf) return 0.0;
    if (x == -kInf) return 1.0;
    return bm::cdf(bm::complement(std_normal(), x));
}

double lower_tail(double x) {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return bm::cdf(std_normal(), x);
}

double tn_quantile(double mu, double sigma, double lo, double hi, double u) {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    double z;
    if (a > 0) {
        // Work with upper tails so that truncation far in the right tail keeps precision.
        const double qa = upper_tail(a), qb = upper_tail(b);
        const double q = qa - u * (qa - qb);
        z = q <= 0 ? b : bm::quantile(bm::complement(std_normal(), q));
    } else {
        const double pa = lower_tail(a), pb = lower_tail(b);
        const double q = pa + u * (pb - pa);
        z = q >= 1 ? b : (q <= 0 ? a : bm::quantile(std_normal(), q));
    }
    return std::clamp(mu + sigma * z, lo, hi);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_number(const std::string& s, const std::string& context) {
    std::string t = s;
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    if (t == "inf" || t == "+inf" || t == "Infinity") return kInf;
    if (t == "-inf" || t == "-Infinity") return -kInf;
    try {
        std::size_t pos = 0;
        double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::ParseError, "bad number '" + s + "' in " + context);
    }
}

} // namespace

const char* to_string(Family f) {
    switch (f) {
    case Family::Normal: return "Normal";
    case Family::TruncatedNormal: return "TruncatedNormal";
    case Family::Lognormal: return "Lognormal";
    case Family::Beta: return "Beta";
    case Family::StudentT: return "StudentT";
    case Family::Bernoulli: return "Bernoulli";
    case Family::Uniform: return "Uniform";
    case Family::PointMass: return "PointMass";
    }
    return "PointMass";
}

DistributionSpec DistributionSpec::normal(double mu, double sigma) {
    DistributionSpec d;
    d.family = Family::Normal;
    d.mu = mu;
    d.sigma = sigma;
    return d;
}

DistributionSpec DistributionSpec::truncated_normal(double mu, double sigma, double lower, double upper) {
    DistributionSpec d = normal(mu, sigma);
    d.family = Family::TruncatedNormal;
    d.lower = lower;
    d.upper = upper;
    return d;
}

DistributionSpec DistributionSpec::lognormal(double mu_log, double sigma_log) {
    DistributionSpec d = normal(mu_log, sigma_log);
    d.family = Family::Lognormal;
    return d;
}

DistributionSpec DistributionSpec::lognormal_from_moments(double mean, double sd) {
    if (!(mean > 0) || !(sd >= 0))
        throw Error(ErrorKind::InvalidSpec, "lognormal moments need mean > 0 and sd >= 0");
    if (sd == 0) return point(mean);
    const double s2 = std::log1p((sd / mean) * (sd / mean));
    return lognormal(std::log(mean) - 0.5 * s2, std::sqrt(s2));
}

DistributionSpec DistributionSpec::beta_dist(double a, double b, double lower, double upper) {
    DistributionSpec d;
    d.family = Family::Beta;
    d.alpha = a;
    d.beta = b;
    d.lower = lower;
    d.upper = upper;
    return d;
}

DistributionSpec DistributionSpec::student_t(double nu, double mu, double sigma) {
    DistributionSpec d = normal(mu, sigma);
    d.family = Family::StudentT;
    d.nu = nu;
    return d;
}

DistributionSpec DistributionSpec::bernoulli(double p) {
    DistributionSpec d;
    d.family = Family::Bernoulli;
    d.p = p;
    return d;
}

DistributionSpec DistributionSpec::uniform(double lower, double upper) {
    DistributionSpec d;
    d.family = Family::Uniform;
    d.lower = lower;
    d.upper = upper;
    return d;
}

DistributionSpec DistributionSpec::point(double value) {
    DistributionSpec d;
    d.family = Family::PointMass;
    d.mu = value;
    return d;
}

bool DistributionSpec::operator==(const DistributionSpec& o) const {
    return format_distribution(*this) == format_distribution(o);
}

void validate(const DistributionSpec& d) {
    auto fail = [&](const std::string& m) {
        throw Error(ErrorKind::InvalidSpec, format_distribution(d) + ": " + m);
    };
    switch (d.family) {
    case Family::Normal:
    case Family::Lognormal:
        if (!std::isfinite(d.mu)) fail("mu must be finite");
        if (!(d.sigma > 0) || !std::isfinite(d.sigma)) fail("sigma must be positive");
        break;
    case Family::TruncatedNormal:
        if (!std::isfinite(d.mu)) fail("mu must be finite");
        if (!(d.sigma > 0) || !std::isfinite(d.sigma)) fail("sigma must be positive");
        if (!(d.lower < d.upper)) fail("truncation requires lower < upper");
        if (upper_tail((d.lower - d.mu) / d.sigma) - upper_tail((d.upper - d.mu) / d.sigma) <= 0 &&
            lower_tail((d.upper - d.mu) / d.sigma) - lower_tail((d.lower - d.mu) / d.sigma) <= 0)
            fail("truncation interval has no probability mass");
        break;
    case Family::Beta:
        if (!(d.alpha > 0 && d.beta > 0)) fail("Beta shapes must be positive");
        if (!(std::isfinite(d.lower) && std::isfinite(d.upper) && d.lower < d.upper)) fail("Beta support invalid");
        break;
    case Family::StudentT:
        if (!(d.nu > 0)) fail("nu must be positive");
        if (!std::isfinite(d.mu)) fail("mu must be finite");
        if (!(d.sigma > 0) || !std::isfinite(d.sigma)) fail("sigma must be positive");
        break;
    case Family::Bernoulli:
        if (!(d.p >= 0 && d.p <= 1)) fail("p must lie in [0, 1]");
        break;
    case Family::Uniform:
        if (!(std::isfinite(d.lower) && std::isfinite(d.upper) && d.lower < d.upper)) fail("uniform bounds invalid");
        break;
    case Family::PointMass:
        if (!std::isfinite(d.mu)) fail("value must be finite");
        break;
    }
}

double quantile(const DistributionSpec& d, double u) {
    switch (d.family) {
    case Family::Normal: return d.mu + d.sigma * bm::quantile(std_normal(), u);
    case Family::TruncatedNormal: return tn_quantile(d.mu, d.sigma, d.lower, d.upper, u);
    case Family::Lognormal: return std::exp(d.mu + d.sigma * bm::quantile(std_normal(), u));
    case Family::Beta: {
        const bm::beta_distribution<double> b(d.alpha, d.beta);
        return d.lower + (d.upper - d.lower) * bm::quantile(b, u);
    }
    case Family::StudentT: {
        const bm::students_t_distribution<double> t(d.nu);
        return d.mu + d.sigma * bm::quantile(t, u);
    }
    case Family::Bernoulli: return u > 1.0 - d.p ? 1.0 : 0.0;
    case Family::Uniform: return d.lower + u * (d.upper - d.lower);
    case Family::PointMass: return d.mu;
    }
    return d.mu;
}

double mean(const DistributionSpec& d) {
    switch (d.family) {
    case Family::Normal: return d.mu;
    case Family::TruncatedNormal: {
        const double a = (d.lower - d.mu) / d.sigma, b = (d.upper - d.mu) / d.sigma;
        const double z = a > 0 ? upper_tail(a) - upper_tail(b) : lower_tail(b) - lower_tail(a);
        return d.mu + d.sigma * (phi(a) - phi(b)) / z;
    }
    case Family::Lognormal: return std::exp(d.mu + 0.5 * d.sigma * d.sigma);
    case Family::Beta: return d.lower + (d.upper - d.lower) * d.alpha / (d.alpha + d.beta);
    case Family::StudentT: return d.nu > 1 ? d.mu : std::numeric_limits<double>::quiet_NaN();
    case Family::Bernoulli: return d.p;
    case Family::Uniform: return 0.5 * (d.lower + d.upper);
    case Family::PointMass: return d.mu;
    }
    return d.mu;
}

double stddev(const DistributionSpec& d) {
    switch (d.family) {
    case Family::Normal: return d.sigma;
    case Family::TruncatedNormal: {
        const double a = (d.lower - d.mu) / d.sigma, b = (d.upper - d.mu) / d.sigma;
        const double z = a > 0 ? upper_tail(a) - upper_tail(b) : lower_tail(b) - lower_tail(a);
        const double aphi = std::isfinite(a) ? a * phi(a) : 0.0;
        const double bphi = std::isfinite(b) ? b * phi(b) : 0.0;
        const double r = (phi(a) - phi(b)) / z;
        return d.sigma * std::sqrt(std::max(0.0, 1.0 + (aphi - bphi) / z - r * r));
    }
    case Family::Lognormal: {
        const double s2 = d.sigma * d.sigma;
        return std::sqrt(std::expm1(s2)) * std::exp(d.mu + 0.5 * s2);
    }
    case Family::Beta: {
        const double ab = d.alpha + d.beta;
        return (d.upper - d.lower) * std::sqrt(d.alpha * d.beta / (ab * ab * (ab + 1.0)));
    }
    case Family::StudentT:
        return d.nu > 2 ? d.sigma * std::sqrt(d.nu / (d.nu - 2.0)) : std::numeric_limits<double>::infinity();
    case Family::Bernoulli: return std::sqrt(d.p * (1.0 - d.p));
    case Family::Uniform: return (d.upper - d.lower) / std::sqrt(12.0);
    case Family::PointMass: return 0.0;
    }
    return 0.0;
}

bool is_degenerate(const DistributionSpec& d) {
    return d.family == Family::PointMass || (d.family == Family::Bernoulli && (d.p == 0.0 || d.p == 1.0));
}

std::string format_distribution(const DistributionSpec& d) {
    std::string out = to_string(d.family);
    out += '{';
    switch (d.family) {
    case Family::Normal:
    case Family::Lognormal: out += "mu=" + fmt(d.mu) + ";sigma=" + fmt(d.sigma); break;
    case Family::TruncatedNormal:
        out += "mu=" + fmt(d.mu) + ";sigma=" + fmt(d.sigma) + ";lower=" + fmt(d.lower) + ";upper=" + fmt(d.upper);
        break;
    case Family::Beta:
        out += "alpha=" + fmt(d.alpha) + ";beta=" + fmt(d.beta) + ";lower=" + fmt(d.lower) + ";upper=" + fmt(d.upper);
        break;
    case Family::StudentT: out += "nu=" + fmt(d.nu) + ";mu=" + fmt(d.mu) + ";sigma=" + fmt(d.sigma); break;
    case Family::Bernoulli: out += "p=" + fmt(d.p); break;
    case Family::Uniform: out += "lower=" + fmt(d.lower) + ";upper=" + fmt(d.upper); break;
    case Family::PointMass: out += "value=" + fmt(d.mu); break;
    }
    out += '}';
    return out;
}

DistributionSpec parse_distribution(const std::string& text) {
    std::string s = text;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t\r\n") + 1);
    const auto open = s.find('{');
    if (open == std::string::npos) return DistributionSpec::point(parse_number(s, "distribution"));
    if (s.back() != '}') throw Error(ErrorKind::ParseError, "unterminated distribution '" + text + "'");
    const std::string name = s.substr(0, open);
    std::map<std::string, double> kv;
    std::stringstream body(s.substr(open + 1, s.size() - open - 2));
    std::string item;
    while (std::getline(body, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "expected key=value in '" + text + "'");
        std::string key = item.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        kv[key] = parse_number(item.substr(eq + 1), text);
    }
    auto get = [&](const std::string& k, double def, bool required) {
        auto it = kv.find(k);
        if (it == kv.end()) {
            if (required) throw Error(ErrorKind::ParseError, "missing parameter '" + k + "' in '" + text + "'");
            return def;
        }
        return it->second;
    };
    DistributionSpec d;
    if (name == "Normal") d = DistributionSpec::normal(get("mu", 0, true), get("sigma", 1, true));
    else if (name == "TruncatedNormal")
        d = DistributionSpec::truncated_normal(get("mu", 0, true), get("sigma", 1, true), get("lower", -kInf, false),
                                               get("upper", kInf, false));
    else if (name == "Lognormal") d = DistributionSpec::lognormal(get("mu", 0, true), get("sigma", 1, true));
    else if (name == "Beta")
        d = DistributionSpec::beta_dist(get("alpha", 1, true), get("beta", 1, true), get("lower", 0, false),
                                        get("upper", 1, false));
    else if (name == "StudentT")
        d = DistributionSpec::student_t(get("nu", 1, true), get("mu", 0, false), get("sigma", 1, false));
    else if (name == "Bernoulli") d = DistributionSpec::bernoulli(get("p", 0.5, true));
    else if (name == "Uniform") d = DistributionSpec::uniform(get("lower", 0, true), get("upper", 1, true));
    else if (name == "PointMass") d = DistributionSpec::point(get("value", 0, true));
    else throw Error(ErrorKind::ParseError, "unknown distribution family '" + name + "'");
    validate(d);
    return d;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

std::vector<double> sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
    validate(spec);
    if (n == 0) throw Error(ErrorKind::InvalidSpec, "sample count must be positive");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = rng.draw(spec);
    return out;
}

double sorted_quantile(const std::vector<double>& sorted, double level) {
    if (sorted.empty()) throw Error(ErrorKind::EmptySample, "empirical quantile of an empty sample");
    const double n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double empirical_inverse_cdf(std::vector<double> samples, double level) {
    if (samples.empty()) throw Error(ErrorKind::EmptySample, "empirical quantile of an empty sample");
    if (!(level > 0 && level < 1)) throw Error(ErrorKind::InvalidGamma, "quantile level must lie in (0, 1)");
    const double n = static_cast<double>(samples.size());
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9 * n));
    rank = std::clamp<std::size_t>(rank, 1, samples.size());
    auto it = samples.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(samples.begin(), it, samples.end());
    return *it;
}

double standard_normal_quantile(double u) {
    if (u <= 0) return -kInf;
    if (u >= 1) return kInf;
    return bm::quantile(std_normal(), u);
}

double standard_normal_cdf(double x) { return lower_tail(x); }

} // namespace ges
