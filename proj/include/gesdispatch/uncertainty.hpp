#pragma once

// Decision-independent uncertainty (parameter identification errors, baseline
// consumption, forecasts), decision-dependent SoC bound model, Monte-Carlo
// bound statistics and the distribution-free quantile bound catalog.

#include "gesdispatch/distributions.hpp"
#include "gesdispatch/ges_core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ges {

// ---------------------------------------------------------------------------
// Quantile bound catalog

struct ShapeClass {
    enum Kind { NoAssumption, Symmetric, Unimodal, SymmetricUnimodal, StudentT, Normal };
    Kind kind = NoAssumption;
    double nu = 5.0; ///< degrees of freedom, StudentT only

    static ShapeClass student_t(double nu) { return {StudentT, nu}; }
    bool operator==(const ShapeClass&) const = default;
};

std::string to_string(const ShapeClass& s);
/// Accepts na, s, u, su, normal, t<nu> (case-insensitive) and the long names.
ShapeClass parse_shape_class(const std::string& s);

/// Largest normalized (1-gamma)-quantile over zero-mean unit-variance
/// distributions of the given shape class.
double cantelli_bound(const ShapeClass& shape, double gamma);

// ---------------------------------------------------------------------------
// Decision-independent uncertainty

/// Per-unit uncertain parameters. Keys of `params` name the perturbed field:
///   TCL:     R, C, K, temp_min, temp_max, p_min, p_max,
///            comfort_lo_offset, comfort_hi_offset (degC, added at every step),
///            initial_temp
///   storage: capacity, eta_c, eta_d, self_discharge, p_c_rated, p_d_rated,
///            soc_lo_offset, soc_hi_offset, soc_init
/// `baseline` holds the per-step baseline distribution (TCL baseline power or
/// EV baseline charging power, kW); one entry is broadcast over the horizon.
struct UnitUncertainty {
    std::map<std::string, DistributionSpec> params;
    std::vector<DistributionSpec> baseline;

    bool operator==(const UnitUncertainty&) const = default;
};

/// Validates the parameter names for the device kind (throws InvalidSpec).
void validate(const UnitUncertainty& unc, const DeviceDescription& dev);

/// Device with every parameter replaced by its mean (baseline at its mean).
DeviceDescription mean_device(const DeviceDescription& dev, const UnitUncertainty& unc);

/// One joint draw of the uncertain parameters and baselines.
DeviceDescription draw_device(const DeviceDescription& dev, const UnitUncertainty& unc, Rng& rng);

enum class BoundKind { PcMax, PdMax, SocLo, SocHi, Alpha, SocBaseline };
inline constexpr std::size_t kBoundKinds = 6;
const char* to_string(BoundKind k);

/// Empirical statistics of one uncertain quantity.
struct BoundStat {
    double mu = 0.0;
    double sigma = 0.0;
    double inv_cdf_hi = 0.0; ///< normalized quantile (q_{1-gamma} - mu) / sigma
    double inv_cdf_lo = 0.0; ///< normalized lower-tail magnitude (mu - q_gamma) / sigma
    std::size_t sample_count = 0; ///< 0 when computed exactly
    std::uint64_t seed = 0;

    /// Value exceeded with probability at most gamma (lower-type limit).
    double lower_type_limit() const { return mu + inv_cdf_hi * sigma; }
    /// Value undercut with probability at most gamma (upper-type limit).
    double upper_type_limit() const { return mu - inv_cdf_lo * sigma; }
};

struct UnitBoundStats {
    std::string unit_id;
    std::array<std::vector<BoundStat>, kBoundKinds> kinds;
    const BoundStat& at(BoundKind k, std::size_t t) const { return kinds[static_cast<std::size_t>(k)][t]; }
    BoundStat& at(BoundKind k, std::size_t t) { return kinds[static_cast<std::size_t>(k)][t]; }
};

struct BoundStats {
    double gamma = 0.05;
    double gamma_balance = 0.05;
    std::vector<UnitBoundStats> units;
    std::vector<BoundStat> load;              ///< per step
    std::vector<std::vector<BoundStat>> res;  ///< per RES unit, per step
};

struct PropagationOptions {
    std::size_t min_samples = 10000;
    double sigma_floor = 1e-9;
};

/// Statistics of a sample (modified in place: sorted).
BoundStat summarize_sample(std::vector<double>& values, double gamma, std::uint64_t seed, double sigma_floor = 1e-9);

/// Monte-Carlo propagation of parameter and baseline uncertainty through the
/// device-to-GES mapping.
UnitBoundStats propagate_diu(const UnitUncertainty& unc, const DeviceDescription& dev, double dt,
                             std::size_t horizon, std::size_t n, std::uint64_t seed, double gamma,
                             const PropagationOptions& opts = {});

/// Statistics of a directly specified random quantity (load, RES output): exact
/// moments and quantiles for finite-variance families (sample_count 0), sampled otherwise.
BoundStat distribution_stat(const DistributionSpec& spec, std::size_t n, std::uint64_t seed, double gamma,
                            const PropagationOptions& opts = {});

/// Replaces every normalized quantile by a shape-class bound.
void apply_shape_class(BoundStats& stats, const ShapeClass& shape);

// ---------------------------------------------------------------------------
// Decision-dependent uncertainty

enum class HFamily { Lognormal, Beta };
enum class DiscomfortVariant { F1_DisutilityOnly, F2_DeadbandAbsolute, F3_LinearOneSided };
enum class BoundSide { Upper, Lower };

const char* to_string(HFamily f);
const char* to_string(DiscomfortVariant v);
HFamily parse_h_family(const std::string& s);
DiscomfortVariant parse_discomfort_variant(const std::string& s);

struct DduSpec {
    double sigma_g = 0.5;
    double sigma_h = 0.1;
    double beta_up = 3.0;
    double beta_lo = 6.0;
    double lambda = 0.7;
    double c_bar = 1.5;
    /// Level at which the expansion quantile Q_g is evaluated; unset means gamma.
    std::optional<double> q_g_level;
    HFamily h_family = HFamily::Lognormal;
    DiscomfortVariant variant = DiscomfortVariant::F2_DeadbandAbsolute;
    double beta_cap = 3.0; ///< support [0, cap] of the Beta contraction factor

    double g_level(double gamma) const { return q_g_level.value_or(gamma); }
    double beta(BoundSide side) const { return side == BoundSide::Upper ? beta_up : beta_lo; }
    bool operator==(const DduSpec&) const = default;
};

/// Throws InvalidSpec on invariant violations.
void validate(const DduSpec& spec);

/// Quantile of the expansion factor g ~ Normal(mu_g, sigma_g) truncated to [0, 1].
double expansion_quantile(double mu_g, double sigma_g, double level);

/// Distribution of the contraction factor H with mean `mean` and standard
/// deviation sigma_h; a point mass at 0 when the mean vanishes.
DistributionSpec h_distribution(double mean, const DduSpec& spec);

/// Normalized (1-gamma)-quantile (q - mean) / sigma_h of H with the given mean.
double h_normalized_quantile(double mean, const DduSpec& spec, double gamma);

struct DduBound {
    DistributionSpec h; ///< contraction factor
    double q_g = 0.0;   ///< expansion factor quantile
    double anchor = 0.0;  ///< Q_g, expanded bound
    double comfort = 0.0;
    double mean = 0.0; ///< mean of the realized bound
    double sd = 0.0;   ///< standard deviation of the realized bound
};

/// Realized bound = anchor + (comfort - anchor) * H.
DduBound ddu_bound_distribution(BoundSide side, double diu_bound, double phys_bound, double comfort_bound,
                                double price, double rd, const DduSpec& spec, double gamma = 0.05);

/// exp(mu + sqrt(2 sigma^2) erfinv(2 level - 1)).
double lognormal_inverse_cdf_closed_form(double mu, double sigma, double level);

/// Time-averaged rating references used to normalize response intensity.
struct RdReference {
    double p_c_ref = 0.0;
    double p_d_ref = 0.0;
};
RdReference rd_reference(const GesParams& params);

/// Response discomfort at step t (describes soc[t+1]).
double response_discomfort(const UnitSchedule& sched, const GesParams& params, const DduSpec& spec, std::size_t t);
Series response_discomfort_series(const UnitSchedule& sched, const GesParams& params, const DduSpec& spec);

} // namespace ges
