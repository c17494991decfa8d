#include "gesdispatch/uncertainty.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ges;

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double bisect(double lo, double hi, const std::function<double(double)>& f, double target) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double normal_quantile_oracle(double p) { return bisect(-12, 12, Phi, p); }

// Truncated-normal oracle by direct CDF inversion and Simpson integration.
double tn_quantile_oracle(double mu, double s, double a, double b, double p) {
    const double za = Phi((a - mu) / s), zb = Phi((b - mu) / s);
    return bisect(a, b, [&](double x) { return (Phi((x - mu) / s) - za) / (zb - za); }, p);
}

double tn_mean_oracle(double mu, double s, double a, double b) {
    const int n = 20000;
    const double h = (b - a) / n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = a + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double f = std::exp(-0.5 * ((x - mu) / s) * ((x - mu) / s));
        num += w * x * f;
        den += w * f;
    }
    return num / den;
}

// Table II closed forms written independently of the library branch layout.
double table_value(ShapeClass::Kind k, double g) {
    switch (k) {
    case ShapeClass::NoAssumption: return std::sqrt((1 - g) / g);
    case ShapeClass::Symmetric: return g < 0.5 ? std::sqrt(1 / (2 * g)) : 0.0;
    case ShapeClass::Unimodal: return g <= 1.0 / 6 ? std::sqrt((4 - 9 * g) / (9 * g)) : std::sqrt((3 - 3 * g) / (1 + 3 * g));
    case ShapeClass::SymmetricUnimodal:
        return g <= 1.0 / 6 ? std::sqrt(2 / (9 * g)) : (g <= 0.5 ? std::sqrt(3.0) * (1 - 2 * g) : 0.0);
    default: return 0.0;
    }
}

DeviceDescription tcl_device() {
    DeviceDescription d;
    d.unit_id = "tcl";
    d.kind = DeviceKind::TCL_IVA;
    ThermalParams th;
    th.resistance = 2.0;
    th.capacitance = 2.0;
    th.cop = 2.5;
    th.temp_min = 20.0;
    th.temp_max = 28.0;
    th.comfort_lo = Series(24, 22.0);
    th.comfort_hi = Series(24, 26.0);
    th.p_min = 0.0;
    th.p_max = 10.0;
    th.outdoor_temp = Series(24, 32.0);
    th.baseline_power = Series(24, 4.0);
    th.deadband = 1.0;
    d.physics = th;
    return d;
}

GesParams flat_params(std::size_t T) {
    GesParams p;
    p.dt = 1.0;
    p.capacity = 10.0;
    p.p_c_max.assign(T, 2.0);
    p.p_d_max.assign(T, 4.0);
    p.soc_lo.assign(T, 0.0);
    p.soc_hi.assign(T, 1.0);
    p.alpha.assign(T, 0.0);
    p.soc_baseline.assign(T, 0.5);
    p.soc_baseline_avg.assign(T, 0.5);
    p.deadband.assign(T, 0.1);
    p.on_prob.assign(T, 1.0);
    return p;
}

const std::vector<ShapeClass::Kind> kClosedForm = {ShapeClass::NoAssumption, ShapeClass::Symmetric,
                                                   ShapeClass::Unimodal, ShapeClass::SymmetricUnimodal};

} // namespace

TEST(Cantelli, SpecificValues) {
    EXPECT_NEAR(cantelli_bound({ShapeClass::NoAssumption}, 0.05), std::sqrt(19.0), 1e-12);
    EXPECT_NEAR(cantelli_bound({ShapeClass::NoAssumption}, 0.05), 4.35890, 1e-5);
    EXPECT_EQ(cantelli_bound({ShapeClass::Symmetric}, 0.5), 0.0);
    EXPECT_NEAR(cantelli_bound({ShapeClass::SymmetricUnimodal}, 1.0 / 6.0), 1.154701, 1e-6);
    EXPECT_NEAR(cantelli_bound({ShapeClass::Normal}, 0.05), normal_quantile_oracle(0.95), 1e-9);
    EXPECT_NEAR(cantelli_bound({ShapeClass::Normal}, 0.05), 1.64485, 1e-5);
}

TEST(Cantelli, ClosedFormsOnGrid) {
    for (int k = 1; k <= 999; ++k) {
        const double g = k / 1000.0;
        for (auto kind : kClosedForm) EXPECT_NEAR(cantelli_bound({kind}, g), table_value(kind, g), 1e-12);
        EXPECT_NEAR(cantelli_bound({ShapeClass::Normal}, g), normal_quantile_oracle(1 - g), 1e-9);
    }
}

TEST(Cantelli, BranchContinuity) {
    const double g = 1.0 / 6.0;
    EXPECT_NEAR(std::sqrt((4 - 9 * g) / (9 * g)), std::sqrt((3 - 3 * g) / (1 + 3 * g)), 1e-12);
    EXPECT_NEAR(std::sqrt(2 / (9 * g)), std::sqrt(3.0) * (1 - 2 * g), 1e-12);
    EXPECT_NEAR(cantelli_bound({ShapeClass::Unimodal}, std::nextafter(g, 1.0)), cantelli_bound({ShapeClass::Unimodal}, g),
                1e-12);
    EXPECT_NEAR(cantelli_bound({ShapeClass::SymmetricUnimodal}, std::nextafter(g, 1.0)),
                cantelli_bound({ShapeClass::SymmetricUnimodal}, g), 1e-12);
    EXPECT_NEAR(cantelli_bound({ShapeClass::SymmetricUnimodal}, std::nextafter(0.5, 1.0)),
                cantelli_bound({ShapeClass::SymmetricUnimodal}, 0.5), 1e-12);
}

TEST(Cantelli, DominanceAndMonotonicity) {
    const ShapeClass t5 = ShapeClass::student_t(5);
    std::vector<double> prev(6, 1e300);
    for (int k = 1; k <= 999; ++k) {
        const double g = k / 1000.0;
        const double na = cantelli_bound({ShapeClass::NoAssumption}, g);
        const double s = cantelli_bound({ShapeClass::Symmetric}, g);
        const double u = cantelli_bound({ShapeClass::Unimodal}, g);
        const double su = cantelli_bound({ShapeClass::SymmetricUnimodal}, g);
        EXPECT_GE(na, s);
        EXPECT_GE(na, u);
        EXPECT_GE(u, su);
        EXPECT_GE(s, su);
        const std::vector<double> now = {na, s, u, su, cantelli_bound(t5, g), cantelli_bound({ShapeClass::Normal}, g)};
        for (std::size_t i = 0; i < now.size(); ++i) {
            EXPECT_LE(now[i], prev[i] + 1e-15);
            prev[i] = now[i];
        }
    }
}

TEST(Cantelli, InvalidGamma) {
    for (double g : {0.0, -0.1, 1.5}) {
        try {
            cantelli_bound({ShapeClass::NoAssumption}, g);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidGamma);
        }
    }
    EXPECT_EQ(cantelli_bound({ShapeClass::NoAssumption}, 1.0), 0.0);
}

TEST(Cantelli, SoundnessForMemberDistributions) {
    std::mt19937_64 gen(3);
    for (int k = 1; k < 1000; k += 7) {
        const double g = k / 1000.0;
        const double z = normal_quantile_oracle(1 - g);
        for (auto kind : kClosedForm) EXPECT_LE(z, cantelli_bound({kind}, g) + 1e-12) << g;
        // Standardized lognormal belongs to the unimodal class.
        for (double s : {0.25, 0.5, 1.0}) {
            const double m = std::exp(0.5 * s * s), sd = std::sqrt(std::expm1(s * s)) * m;
            const double q = (std::exp(s * z) - m) / sd;
            EXPECT_LE(q, cantelli_bound({ShapeClass::Unimodal}, g) + 1e-12);
            EXPECT_LE(q, cantelli_bound({ShapeClass::NoAssumption}, g) + 1e-12);
        }
        // Standardized Student-t(5) belongs to the symmetric unimodal class.
        const double t5 = cantelli_bound(ShapeClass::student_t(5), g);
        EXPECT_LE(t5, cantelli_bound({ShapeClass::SymmetricUnimodal}, g) + 1e-12);
    }
}

TEST(Cantelli, StudentTMatchesSimulation) {
    // Normalized t(5) quantile against a simulated standardized sample.
    auto v = sample(DistributionSpec::student_t(5.0), 1000000, 99);
    for (auto& x : v) x *= std::sqrt(3.0 / 5.0);
    EXPECT_NEAR(empirical_inverse_cdf(v, 0.95), cantelli_bound(ShapeClass::student_t(5), 0.05), 0.01);
}

TEST(Cantelli, ShapeClassParsing) {
    EXPECT_EQ(parse_shape_class("unimodal").kind, ShapeClass::Unimodal);
    EXPECT_EQ(parse_shape_class("NA").kind, ShapeClass::NoAssumption);
    EXPECT_EQ(parse_shape_class("su").kind, ShapeClass::SymmetricUnimodal);
    EXPECT_EQ(parse_shape_class("t5").nu, 5.0);
    EXPECT_EQ(parse_shape_class(to_string(ShapeClass::student_t(7.5))).nu, 7.5);
    EXPECT_THROW(parse_shape_class("bimodal"), Error);
}

TEST(LognormalClosedForm, Examples) {
    for (double s : {0.01, 0.1, 1.0, 3.0}) EXPECT_NEAR(lognormal_inverse_cdf_closed_form(0.0, s, 0.5), 1.0, 1e-15);
    const double z = normal_quantile_oracle(0.95);
    EXPECT_NEAR(lognormal_inverse_cdf_closed_form(0.0, 0.1, 0.95), std::exp(0.1 * z), 1e-12);
    EXPECT_NEAR(lognormal_inverse_cdf_closed_form(0.0, 0.1, 0.95), 1.17865, 2e-4);
    EXPECT_NEAR(lognormal_inverse_cdf_closed_form(0.3, 0.1, 0.95), std::exp(0.3) * std::exp(0.1 * z), 1e-12);
    EXPECT_NEAR(lognormal_inverse_cdf_closed_form(0.3, 0.1, 0.95), 1.59115, 2e-4);
}

TEST(LognormalClosedForm, ConvexInMu) {
    const double h = 0.01;
    for (double level : {0.5, 0.9, 0.95, 0.99}) {
        for (double m = h; m <= 3.0 - h; m += h) {
            const double d2 = lognormal_inverse_cdf_closed_form(m - h, 0.1, level) -
                              2 * lognormal_inverse_cdf_closed_form(m, 0.1, level) +
                              lognormal_inverse_cdf_closed_form(m + h, 0.1, level);
            EXPECT_GE(d2, -1e-9);
        }
    }
}

TEST(Propagate, DegenerateDistributionsGiveDeterministicBounds) {
    DeviceDescription d = tcl_device();
    UnitUncertainty unc;
    unc.params["R"] = DistributionSpec::point(2.0);
    unc.params["p_max"] = DistributionSpec::point(10.0);
    unc.baseline = {DistributionSpec::point(4.0)};
    auto stats = propagate_diu(unc, d, 1.0, 24, 10000, 1, 0.05);
    GesParams det = map_device_to_ges(d, 1.0, 24);
    for (std::size_t t = 0; t < 24; ++t) {
        EXPECT_EQ(stats.at(BoundKind::PcMax, t).sigma, 0.0);
        EXPECT_EQ(stats.at(BoundKind::SocHi, t).sigma, 0.0);
        EXPECT_EQ(stats.at(BoundKind::Alpha, t).sigma, 0.0);
        EXPECT_NEAR(stats.at(BoundKind::PcMax, t).mu, det.p_c_max[t], 1e-12);
        EXPECT_NEAR(stats.at(BoundKind::PdMax, t).mu, det.p_d_max[t], 1e-12);
        EXPECT_NEAR(stats.at(BoundKind::SocHi, t).mu, det.soc_hi[t], 1e-12);
        EXPECT_NEAR(stats.at(BoundKind::SocLo, t).mu, det.soc_lo[t], 1e-12);
        EXPECT_NEAR(stats.at(BoundKind::Alpha, t).mu, det.alpha[t], 1e-12);
        EXPECT_EQ(stats.at(BoundKind::SocHi, t).inv_cdf_hi, 0.0);
    }
}

TEST(Propagate, RatingMeanFollowsTruncatedNormal) {
    DeviceDescription d = tcl_device();
    UnitUncertainty unc;
    unc.params["p_max"] = DistributionSpec::truncated_normal(10.0, 0.5, 8.5, 11.5);
    unc.baseline = {DistributionSpec::point(4.0)};
    const std::size_t n = 50000;
    auto stats = propagate_diu(unc, d, 1.0, 24, n, 2, 0.05);
    const double oracle = tn_mean_oracle(10.0, 0.5, 8.5, 11.5) - 4.0;
    for (std::size_t t = 0; t < 24; ++t) {
        const auto& s = stats.at(BoundKind::PcMax, t);
        EXPECT_NEAR(s.mu, oracle, 3 * s.sigma / std::sqrt(double(n)));
        EXPECT_NEAR(oracle, 6.0, 1e-9);
    }
}

TEST(Propagate, TenPercentIdentificationError) {
    DeviceDescription d = tcl_device();
    UnitUncertainty unc;
    for (const auto& [name, m] : std::vector<std::pair<std::string, double>>{{"R", 2.0}, {"C", 2.0}, {"p_max", 10.0}})
        unc.params[name] = DistributionSpec::truncated_normal(m, 0.05 * m, 0.9 * m, 1.1 * m);
    unc.params["comfort_lo_offset"] = DistributionSpec::truncated_normal(0.0, 0.3, -0.6, 0.6);
    unc.params["comfort_hi_offset"] = DistributionSpec::truncated_normal(0.0, 0.3, -0.6, 0.6);
    unc.baseline = {DistributionSpec::lognormal_from_moments(4.0, 0.4)};
    auto stats = propagate_diu(unc, d, 1.0, 24, 20000, 3, 0.05);
    for (std::size_t t = 0; t < 24; ++t) EXPECT_GT(stats.at(BoundKind::SocHi, t).sigma, 0.0);
    Rng rng(3);
    for (int s = 0; s < 20000; ++s) {
        GesParams p = map_device_to_ges(draw_device(d, unc, rng), 1.0, 24);
        for (std::size_t t = 0; t < 24; ++t) ASSERT_LE(p.soc_lo[t], p.soc_hi[t]);
    }
}

TEST(Propagate, EmpiricalTailsMatchDefinition) {
    std::vector<double> v(1000);
    for (int i = 0; i < 1000; ++i) v[i] = i + 1;
    auto s = summarize_sample(v, 0.05, 0);
    EXPECT_NEAR(s.mu, 500.5, 1e-12);
    EXPECT_NEAR(s.upper_type_limit(), 50.0, 1e-9);
    EXPECT_NEAR(s.lower_type_limit(), 950.0, 1e-9);
}

TEST(Propagate, RejectsTooFewSamples) {
    DeviceDescription d = tcl_device();
    EXPECT_THROW(propagate_diu({}, d, 1.0, 24, 100, 1, 0.05), Error);
}

TEST(Discomfort, ZeroScheduleAtBaseline) {
    GesParams p = flat_params(24);
    DduSpec spec;
    UnitSchedule s = make_schedule(24, 0.5);
    for (std::size_t t = 0; t < 24; ++t) EXPECT_EQ(response_discomfort(s, p, spec, t), 0.0);
}

TEST(Discomfort, DisutilityOnlyCountsSteps) {
    GesParams p = flat_params(24);
    DduSpec spec;
    spec.variant = DiscomfortVariant::F1_DisutilityOnly;
    spec.lambda = 1.0;
    UnitSchedule s = make_schedule(24, 0.5);
    const double ref = rd_reference(p).p_d_ref;
    for (std::size_t t = 0; t < 24; ++t) s.p_d[t] = ref;
    for (std::size_t t = 1; t < 24; ++t) {
        UnitSchedule c = s;
        for (std::size_t k = t; k < 24; ++k) c.p_d[k] = 0.0;
        EXPECT_NEAR(response_discomfort(c, p, spec, t), double(t) / 24.0, 1e-12);
    }
}

TEST(Discomfort, DeadbandExample) {
    GesParams p = flat_params(24);
    DduSpec spec;
    spec.lambda = 0.7;
    UnitSchedule s = make_schedule(24, 0.5);
    s.soc[6] = 0.5 + 0.15;
    EXPECT_NEAR(response_discomfort(s, p, spec, 5), 0.3 * (0.15 - 0.05), 1e-12);
    spec.variant = DiscomfortVariant::F3_LinearOneSided;
    EXPECT_EQ(response_discomfort(s, p, spec, 5), 0.0);
    s.soc[6] = 0.5 - 0.15;
    EXPECT_NEAR(response_discomfort(s, p, spec, 5), 0.3 * 0.15, 1e-12);
}

TEST(Discomfort, MonotoneUnderPerturbation) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(0, 1);
    GesParams p = flat_params(24);
    for (auto variant : {DiscomfortVariant::F1_DisutilityOnly, DiscomfortVariant::F2_DeadbandAbsolute,
                         DiscomfortVariant::F3_LinearOneSided}) {
        DduSpec spec;
        spec.variant = variant;
        for (int k = 0; k < 200; ++k) {
            UnitSchedule s = make_schedule(24, 0.5);
            for (std::size_t t = 0; t < 24; ++t) {
                s.p_c[t] = U(gen);
                s.p_d[t] = U(gen);
                s.soc[t + 1] = 0.2 + 0.6 * U(gen);
            }
            auto base = response_discomfort_series(s, p, spec);
            UnitSchedule b = s;
            const std::size_t t0 = gen() % 24;
            b.p_c[t0] += U(gen);
            b.p_d[t0] += U(gen);
            // Push the SoC further from the baseline average.
            const double dev = b.soc[t0 + 1] - 0.5;
            b.soc[t0 + 1] = 0.5 + dev * (1.0 + U(gen));
            auto pert = response_discomfort_series(b, p, spec);
            for (std::size_t t = 0; t < 24; ++t) EXPECT_GE(pert[t], base[t] - 1e-15);
        }
    }
}

TEST(Ddu, ZeroDiscomfortLeavesExpandedAnchor) {
    DduSpec spec;
    spec.q_g_level = 0.5;
    auto b = ddu_bound_distribution(BoundSide::Upper, 0.8, 1.0, 0.6, 0.3, 0.0, spec);
    EXPECT_EQ(b.sd, 0.0);
    EXPECT_NEAR(b.mean, b.anchor, 1e-15);
    EXPECT_NEAR(b.anchor, 0.8 + 0.2 * tn_quantile_oracle(0.2, 0.5, 0, 1, 0.5), 1e-9);
}

TEST(Ddu, ZeroPriceMedianAnchor) {
    DduSpec spec;
    spec.q_g_level = 0.5;
    auto b = ddu_bound_distribution(BoundSide::Lower, 0.3, 0.0, 0.45, 0.0, 0.0, spec);
    const double q = tn_quantile_oracle(0.0, 0.5, 0.0, 1.0, 0.5);
    EXPECT_NEAR(b.q_g, q, 1e-9);
    EXPECT_NEAR(b.anchor, 0.3 - 0.3 * q, 1e-9);
}

TEST(Ddu, MeanIsAffineInDiscomfort) {
    DduSpec spec;
    for (double rd : {0.01, 0.05, 0.2, 0.5}) {
        auto up = ddu_bound_distribution(BoundSide::Upper, 0.75, 1.0, 0.55, 0.3, rd, spec);
        EXPECT_NEAR(up.mean, up.anchor + (0.55 - up.anchor) * spec.beta_up * rd, 1e-12);
        EXPECT_NEAR(up.sd, (up.anchor - 0.55) * spec.sigma_h, 1e-12);
        auto lo = ddu_bound_distribution(BoundSide::Lower, 0.25, 0.0, 0.45, 0.6, rd, spec);
        EXPECT_NEAR(lo.mean, lo.anchor + (0.45 - lo.anchor) * spec.beta_lo * rd, 1e-12);
    }
}

TEST(Ddu, OrderingViolation) {
    DduSpec spec;
    try {
        ddu_bound_distribution(BoundSide::Upper, 0.5, 1.0, 0.7, 0.3, 0.0, spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OrderingViolation);
    }
    EXPECT_THROW(ddu_bound_distribution(BoundSide::Lower, 0.3, 0.4, 0.5, 0.3, 0.0, spec), Error);
}

TEST(Ddu, PaperParametersGiveOrderedBounds) {
    DduSpec spec; // sigma_g 0.5, sigma_h 0.1, beta 3/6, c_bar 1.5
    spec.q_g_level = 0.5;
    const double gamma = 0.05;
    for (double rd : {0.0, 0.05, 0.1, 0.2}) {
        auto up = ddu_bound_distribution(BoundSide::Upper, 0.75, 1.0, 0.55, 0.3, rd, spec, gamma);
        auto lo = ddu_bound_distribution(BoundSide::Lower, 0.25, 0.0, 0.45, 0.6, rd, spec, gamma);
        Rng a(11), b(12);
        int ordered = 0;
        const int n = 100000;
        for (int s = 0; s < n; ++s) {
            const double hu = a.draw(up.h), hl = b.draw(lo.h);
            const double ru = up.anchor + (up.comfort - up.anchor) * hu;
            const double rl = lo.anchor + (lo.comfort - lo.anchor) * hl;
            ordered += rl <= ru;
        }
        EXPECT_GE(ordered, 0.99 * n) << rd;
    }
}

TEST(Ddu, NormalizedQuantileOfContraction) {
    DduSpec spec;
    EXPECT_EQ(h_normalized_quantile(0.0, spec, 0.05), 0.0);
    for (double m : {0.05, 0.3, 1.0}) {
        const double f = h_normalized_quantile(m, spec, 0.05);
        // Lognormal with mean m and sd sigma_h, simulated.
        auto v = sample(DistributionSpec::lognormal_from_moments(m, spec.sigma_h), 400000, 21);
        EXPECT_NEAR(m + f * spec.sigma_h, empirical_inverse_cdf(v, 0.95), 0.01 * (m + 0.1));
        EXPECT_LE(f, cantelli_bound({ShapeClass::Unimodal}, 0.05));
    }
    spec.h_family = HFamily::Beta;
    const auto d = h_distribution(0.3, spec);
    EXPECT_NEAR(mean(d), 0.3, 1e-12);
    EXPECT_NEAR(stddev(d), 0.1, 1e-12);
    EXPECT_LE(h_normalized_quantile(0.3, spec, 0.05), cantelli_bound({ShapeClass::Unimodal}, 0.05));
}
