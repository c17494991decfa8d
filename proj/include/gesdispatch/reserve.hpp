#pragma once

// Day-ahead dispatch with reserve covering GES on-off unavailability:
// deterministic (S1) or probabilistic (S2) reserve.

#include "gesdispatch/dispatch.hpp"

namespace ges {

/// R = max(0, 1 - gamma / (1 - p_on)); throws InvalidProbability outside the domain.
double required_reliability(double p_on, double gamma);

/// a * R^b.
double reserve_price(double reliability, double a, double b);

/// Throws InvalidSpec on violated reserve invariants.
void validate(const ReserveSpec& spec);

/// Per unit and step reserve price; zero where the unit is always on.
std::vector<Series> reserve_prices(const std::vector<UnitLp>& units, const ReserveSpec& spec, double gamma);

/// Extends a dispatch program with reserve variables, bounds, ramp limits and
/// the substitution row p_d + rs <= p_d_max for units that may be off.
void add_reserve(DispatchLp& dlp, const ScenarioBundle& scn, const ReserveSpec& spec);

/// Base model (cfg.mode, robust reformulation for M3) extended with reserve.
DispatchStrategy solve_with_reserve(const ScenarioBundle& scn, const BoundStats& stats, const ReserveSpec& spec,
                                    const SolveConfig& cfg);

} // namespace ges
