#pragma once

// Ex-post Monte-Carlo evaluation of dispatch strategies against realized
// practical SoC bounds and realized decision-independent quantities.

#include "gesdispatch/dispatch.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ges {

/// Strategy-specific generator of practical SoC bounds.
struct PracticalModel {
    std::size_t units = 0;
    std::size_t horizon = 0;
    std::vector<std::array<std::vector<DduGeometry>, 2>> geometry; ///< unit, side (0 upper), step
    std::vector<std::array<Series, 2>> h_mean;                     ///< beta * rd
    std::vector<DduSpec> ddu;
    std::vector<double> capacity;
    std::vector<Series> soc; ///< realized trajectories under the mean dynamics
};

PracticalModel practical_model(const DispatchStrategy& strategy, const ScenarioBundle& scn, const BoundStats& stats);

struct RealizationBatch {
    std::size_t draws = 0;
    std::size_t units = 0;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    std::vector<double> behavior; ///< shared behavioral uniform per draw
    std::vector<double> upper;    ///< (draw, unit, step)
    std::vector<double> lower;
    std::vector<Series> soc;      ///< realized SoC per unit (T+1 entries)
    std::size_t crossings = 0; ///< pairs that crossed on the first draw
    std::size_t clipped = 0;   ///< pairs clipped to the midpoint after resampling failed

    std::size_t index(std::size_t s, std::size_t i, std::size_t t) const { return (s * units + i) * horizon + t; }
};

RealizationBatch realize_practical_bounds(const DispatchStrategy& strategy, const ScenarioBundle& scn,
                                          const BoundStats& stats, std::size_t draws, std::uint64_t seed);
RealizationBatch realize_practical_bounds(const PracticalModel& model, std::size_t draws, std::uint64_t seed);

struct ReliabilityReport {
    double gamma = 0.0;
    std::size_t draws = 0;
    std::uint64_t seed = 0;
    double lorp = 0.0;
    double lorp_stderr = 0.0;
    Series erns;          ///< kWh per step, positive above the upper bound
    double erns_total = 0.0;
    double erns_abs_total = 0.0;
    Series over_energy;   ///< expected kWh beyond realized upper bounds
    Series under_energy;  ///< expected kWh below realized lower bounds
    double cost_da = 0.0;
    double cost_rt = 0.0;
    double cost_tc = 0.0;
    std::vector<Series> violation_freq; ///< per unit and step
    std::size_t crossings = 0;
    std::size_t clipped = 0;
};

/// Metrics of a stored batch; `capacity` holds S_i in kWh.
ReliabilityReport compute_lorp_erns(const DispatchStrategy& strategy, const RealizationBatch& batch,
                                    const std::vector<double>& capacity);

/// Real-time cost of under-delivery (1.3 ToU) and over-delivery (0.3 ToU loss).
double penalty_cost(const ReliabilityReport& report, const ScenarioBundle& scn);
double penalty_cost(const DispatchStrategy& strategy, const RealizationBatch& batch, const ScenarioBundle& scn,
                    const std::vector<double>& capacity);

/// Streaming evaluation without storing the batch; fills the cost fields.
ReliabilityReport evaluate_reliability(const DispatchStrategy& strategy, const ScenarioBundle& scn,
                                       const BoundStats& stats, std::size_t draws, std::uint64_t seed);

/// Violation frequency of every individually reformulated DIU row.
struct RowFrequency {
    std::string row;
    double frequency = 0.0;
    double gamma = 0.0;
};

struct DiuRowReport {
    std::size_t draws = 0;
    std::vector<RowFrequency> rows;
    double max_excess = 0.0; ///< max over rows of (frequency - gamma) / stderr
};

DiuRowReport diu_row_violations(const DispatchStrategy& strategy, const ScenarioBundle& scn, std::size_t draws,
                                std::uint64_t seed, double tol = 1e-9);

/// Average expected contraction of the practical bounds toward comfort (SoC units).
struct ContractionSummary {
    double upper = 0.0;
    double lower = 0.0;
    double mean = 0.0;
};
ContractionSummary contraction_summary(const PracticalModel& model);

} // namespace ges
