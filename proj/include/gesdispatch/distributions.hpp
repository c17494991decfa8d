#pragma once

// Univariate distributions, reproducible random streams and empirical
// quantiles. Every draw is produced by inverse-CDF transform of a uniform so
// that common random numbers give monotone coupling between parameter sets.

#include "gesdispatch/error.hpp"

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace ges {

enum class Family { Normal, TruncatedNormal, Lognormal, Beta, StudentT, Bernoulli, Uniform, PointMass };

const char* to_string(Family f);

/// Tagged description of a univariate distribution.
///
/// Parameter use by family:
///   Normal          mu, sigma
///   TruncatedNormal mu, sigma, lower, upper (either bound may be infinite)
///   Lognormal       mu, sigma of the underlying normal
///   Beta            alpha, beta, support [lower, upper] (default [0, 1])
///   StudentT        nu, location mu, scale sigma
///   Bernoulli       p
///   Uniform         lower, upper
///   PointMass       mu
struct DistributionSpec {
    Family family = Family::PointMass;
    double mu = 0.0;
    double sigma = 1.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    double alpha = 1.0;
    double beta = 1.0;
    double nu = 1.0;
    double p = 0.5;

    static DistributionSpec normal(double mu, double sigma);
    static DistributionSpec truncated_normal(double mu, double sigma, double lower, double upper);
    static DistributionSpec lognormal(double mu_log, double sigma_log);
    /// Lognormal with the given arithmetic mean and standard deviation.
    static DistributionSpec lognormal_from_moments(double mean, double sd);
    static DistributionSpec beta_dist(double a, double b, double lower = 0.0, double upper = 1.0);
    static DistributionSpec student_t(double nu, double mu = 0.0, double sigma = 1.0);
    static DistributionSpec bernoulli(double p);
    static DistributionSpec uniform(double lower, double upper);
    static DistributionSpec point(double value);

    bool operator==(const DistributionSpec& o) const;
};

/// Throws InvalidSpec when the parameters violate the family invariants.
void validate(const DistributionSpec& spec);

double quantile(const DistributionSpec& spec, double u);
double mean(const DistributionSpec& spec);
double stddev(const DistributionSpec& spec);
bool is_degenerate(const DistributionSpec& spec);

/// Text form, e.g. "TruncatedNormal{mu=10;sigma=0.5;lower=8.5;upper=11.5}".
std::string format_distribution(const DistributionSpec& spec);
DistributionSpec parse_distribution(const std::string& text);

/// 64-bit mixing function used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(const std::string& s);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

/// Deterministic uniform stream on the open interval (0, 1).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }
    double draw(const DistributionSpec& spec) { return quantile(spec, uniform()); }

private:
    std::mt19937_64 gen_;
};

std::vector<double> sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

/// Nearest-rank quantile: the ceil(level * n)-th order statistic.
double empirical_inverse_cdf(std::vector<double> samples, double level);
/// Same rule on an already sorted sample.
double sorted_quantile(const std::vector<double>& sorted, double level);

double standard_normal_quantile(double u);
double standard_normal_cdf(double x);

} // namespace ges
