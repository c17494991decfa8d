#include "gesdispatch/distributions.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ges;

namespace {

double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Bisection on the error-function CDF, independent of the library's quantile.
double normal_quantile_by_bisection(double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Sample, DegenerateBernoulli) {
    for (std::uint64_t seed : {0ULL, 1ULL, 12345ULL}) {
        auto v = sample(DistributionSpec::bernoulli(1.0), 5, seed);
        EXPECT_EQ(v, std::vector<double>(5, 1.0));
    }
}

TEST(Sample, StandardNormalMoments) {
    auto v = sample(DistributionSpec::normal(0.0, 1.0), 1000000, 42);
    EXPECT_NEAR(sample_mean(v), 0.0, 0.005);
    EXPECT_NEAR(sample_sd(v), 1.0, 0.005);
}

TEST(Sample, HalfNormalMean) {
    const double inf = std::numeric_limits<double>::infinity();
    auto v = sample(DistributionSpec::truncated_normal(0.0, 1.0, 0.0, inf), 1000000, 43);
    EXPECT_NEAR(sample_mean(v), std::sqrt(2.0 / M_PI), 0.01);
    for (double x : v) ASSERT_GE(x, 0.0);
}

TEST(Sample, BitIdenticalForSameSeed) {
    const auto spec = DistributionSpec::lognormal(0.3, 0.4);
    auto a = sample(spec, 1000, 9);
    auto b = sample(spec, 1000, 9);
    auto c = sample(spec, 1000, 10);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Sample, InvalidSpec) {
    try {
        sample(DistributionSpec::normal(0.0, -1.0), 3, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
    }
    EXPECT_THROW(sample(DistributionSpec::truncated_normal(0, 1, 2, 1), 3, 1), Error);
    EXPECT_THROW(sample(DistributionSpec::bernoulli(1.5), 3, 1), Error);
    EXPECT_THROW(sample(DistributionSpec::beta_dist(0.0, 1.0), 3, 1), Error);
    EXPECT_THROW(sample(DistributionSpec::student_t(0.0), 3, 1), Error);
}

TEST(Sample, TruncatedNormalFarTailStaysInside) {
    const auto spec = DistributionSpec::truncated_normal(0.0, 1.0, 8.0, 9.0);
    auto v = sample(spec, 10000, 3);
    for (double x : v) {
        ASSERT_GE(x, 8.0);
        ASSERT_LE(x, 9.0);
    }
    EXPECT_NEAR(sample_mean(v), mean(spec), 0.01);
}

TEST(Moments, AnalyticalAgainstSimulation) {
    const std::vector<DistributionSpec> specs = {
        DistributionSpec::truncated_normal(10, 0.5, 8.5, 11.5), DistributionSpec::lognormal(0.2, 0.3),
        DistributionSpec::beta_dist(2.0, 5.0, 0.0, 3.0),       DistributionSpec::student_t(5.0, 1.0, 2.0),
        DistributionSpec::uniform(-1.0, 3.0),                   DistributionSpec::bernoulli(0.83)};
    for (const auto& s : specs) {
        auto v = sample(s, 400000, 77);
        const double se = stddev(s) / std::sqrt(400000.0);
        EXPECT_NEAR(sample_mean(v), mean(s), 4 * se) << format_distribution(s);
        EXPECT_NEAR(sample_sd(v), stddev(s), 0.02 * stddev(s)) << format_distribution(s);
    }
}

TEST(Moments, LognormalFromMoments) {
    const auto s = DistributionSpec::lognormal_from_moments(0.3, 0.1);
    EXPECT_NEAR(mean(s), 0.3, 1e-14);
    EXPECT_NEAR(stddev(s), 0.1, 1e-14);
}

TEST(EmpiricalQuantile, SingleSample) {
    for (double level : {0.01, 0.5, 0.99}) EXPECT_EQ(empirical_inverse_cdf({5.0}, level), 5.0);
}

TEST(EmpiricalQuantile, NearestRankByHand) {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    std::reverse(v.begin(), v.end());
    EXPECT_EQ(empirical_inverse_cdf(v, 0.95), 95.0);
    EXPECT_EQ(empirical_inverse_cdf(v, 0.951), 96.0);
    EXPECT_EQ(empirical_inverse_cdf(v, 0.001), 1.0);
}

TEST(EmpiricalQuantile, StandardNormalAtLargeSample) {
    auto v = sample(DistributionSpec::normal(0.0, 1.0), 1000000, 5);
    const double oracle = normal_quantile_by_bisection(0.95);
    EXPECT_NEAR(oracle, 1.6449, 1e-4);
    EXPECT_NEAR(empirical_inverse_cdf(v, 0.95), oracle, 0.01);
}

TEST(EmpiricalQuantile, ConvergenceAtHundredThousand) {
    // Standard error of the 0.95 quantile: sqrt(p(1-p)/n)/phi(z).
    const double z = normal_quantile_by_bisection(0.95);
    const double dens = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
    const double se = std::sqrt(0.95 * 0.05 / 1e5) / dens;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto v = sample(DistributionSpec::normal(0.0, 1.0), 100000, seed);
        const double err = std::abs(empirical_inverse_cdf(v, 0.95) - z);
        EXPECT_LE(err, std::min(0.02, 3 * se + 1e-12) + 0.0);
    }
}

TEST(EmpiricalQuantile, MonotoneInLevel) {
    auto v = sample(DistributionSpec::lognormal(0, 1), 5000, 8);
    std::sort(v.begin(), v.end());
    double prev = -1e300;
    for (int k = 1; k < 1000; ++k) {
        const double q = sorted_quantile(v, k / 1000.0);
        EXPECT_GE(q, prev);
        prev = q;
    }
}

TEST(EmpiricalQuantile, EmptySample) {
    try {
        empirical_inverse_cdf({}, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySample);
    }
}

TEST(Format, RoundTrip) {
    const std::vector<DistributionSpec> specs = {
        DistributionSpec::normal(0.1, 0.7),
        DistributionSpec::truncated_normal(10, 0.5, 8.5, 11.5),
        DistributionSpec::truncated_normal(0, 1, 0, std::numeric_limits<double>::infinity()),
        DistributionSpec::lognormal(0.3, 0.1),
        DistributionSpec::beta_dist(2, 3, 0, 3),
        DistributionSpec::student_t(5, 0, 1),
        DistributionSpec::bernoulli(0.83),
        DistributionSpec::uniform(1, 2),
        DistributionSpec::point(1.0 / 3.0)};
    for (const auto& s : specs) {
        const auto text = format_distribution(s);
        EXPECT_EQ(format_distribution(parse_distribution(text)), text);
        EXPECT_TRUE(parse_distribution(text) == s);
    }
    EXPECT_EQ(parse_distribution("4.5").mu, 4.5);
    EXPECT_THROW(parse_distribution("Gamma{k=1}"), Error);
    EXPECT_THROW(parse_distribution("Normal{mu=1"), Error);
}

TEST(Seeds, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
    EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
    EXPECT_EQ(derive_seed(5, {hash_string("tcl_001"), 4}), derive_seed(5, {hash_string("tcl_001"), 4}));
}
