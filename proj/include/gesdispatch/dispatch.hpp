#pragma once

// Day-ahead economic dispatch of a GES fleet: deterministic (M1), chance
// constrained with decision-independent uncertainty (M2) and with
// decision-dependent SoC bounds (M3, robust or iterative reformulation).

#include "gesdispatch/lp.hpp"
#include "gesdispatch/uncertainty.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ges {

enum class ModelMode { M1, M2, M3 };
enum class Reform { R1, R2 };

const char* to_string(ModelMode m);
const char* to_string(Reform r);
ModelMode parse_model_mode(const std::string& s);
Reform parse_reform(const std::string& s);

enum class ReserveMode { None, S1_Deterministic, S2_Probabilistic };
const char* to_string(ReserveMode m);
ReserveMode parse_reserve_mode(const std::string& s);

struct ReserveSpec {
    ReserveMode mode = ReserveMode::None;
    double lower = 0.0;            ///< kW, per unit and step
    double upper = 0.0;            ///< kW, per unit and step (units may override)
    double ramp_up = kUnbounded;   ///< kW per step
    double ramp_dn = kUnbounded;
    double a = 1.0;                ///< price at full reliability
    double b = 2.0;                ///< price-curve exponent
    std::optional<double> s1_price; ///< flat S1 price, defaults to a

    bool operator==(const ReserveSpec&) const = default;
};

struct UnitModel {
    DeviceDescription device;
    UnitUncertainty uncertainty;
    DduSpec ddu;
    Series price_c; ///< per step or a single broadcast value
    Series price_d;
    std::optional<double> reserve_upper;

    bool operator==(const UnitModel&) const = default;
};

struct ScenarioBundle {
    std::string name;
    std::size_t horizon = 24;
    double dt = 1.0;
    std::vector<UnitModel> units;
    Series tou_price;
    std::vector<DistributionSpec> load;              ///< per step
    std::vector<std::string> res_names;
    std::vector<std::vector<DistributionSpec>> res;  ///< per RES unit, per step
    double grid_cap = kUnbounded;
    double gamma = 0.05;
    std::optional<double> gamma_balance;
    std::vector<std::size_t> dispatch_window; ///< empty means every step
    ModelMode mode = ModelMode::M3;
    ShapeClass shape{ShapeClass::Unimodal};
    ReserveSpec reserve;

    double balance_gamma() const { return gamma_balance.value_or(gamma); }
    bool in_window(std::size_t t) const;
    bool operator==(const ScenarioBundle&) const = default;
};

/// Every invariant violation, with unit and step names.
std::vector<std::string> validation_issues(const ScenarioBundle& scn);
/// Throws ValidationError (or EmptyFleet) listing all issues.
void require_valid(const ScenarioBundle& scn);

/// Per-unit mean parameters mapped to the GES model.
std::vector<GesParams> mean_params(const ScenarioBundle& scn);

/// Monte-Carlo statistics of every uncertain bound of the scenario.
BoundStats compute_bound_stats(const ScenarioBundle& scn, std::size_t n, std::uint64_t seed,
                               const PropagationOptions& opts = {});

// ---------------------------------------------------------------------------
// LP assembly

/// LP data of one (possibly virtual) unit.
struct UnitLp {
    std::string unit_id;
    GesParams nominal; ///< mean parameters: recursion coefficients and discomfort references
    Series pc_hi, pd_hi;
    Series soc_lo, soc_hi; ///< DIU limits (tightened in M2/M3)
    Series alpha;
    Series price_c, price_d;
    Series on_prob;
    DduSpec ddu;
    double reserve_upper = 0.0;
};

std::vector<UnitLp> prepare_units(const ScenarioBundle& scn, ModelMode mode, const BoundStats* stats);

/// Load requirement and RES supply entering the balance row at each step.
struct BalanceLimits {
    Series load;
    Series res;
};
BalanceLimits balance_limits(const ScenarioBundle& scn, ModelMode mode, const BoundStats* stats);

/// Geometry of one decision-dependent bound row.
struct DduGeometry {
    double diu = 0.0;
    double phys = 0.0;
    double comfort = 0.0;
    double mu_g = 0.0; ///< location of the expansion factor, price / c_bar
    double q_g = 0.0;
    double anchor = 0.0;
    double delta = 0.0; ///< |anchor - comfort|
};
DduGeometry ddu_geometry(const UnitLp& u, std::size_t t, BoundSide side, double gamma);

/// Normalized h quantiles per unit, side (0 upper, 1 lower) and step.
using FInv = std::vector<std::array<Series, 2>>;
FInv uniform_f_inv(std::size_t units, std::size_t horizon, double value);

struct ObjectiveTerms {
    double dt = 1.0;
    Series grid_price;
    std::vector<Series> price_c, price_d;
};
ObjectiveTerms build_objective(const ScenarioBundle& scn);
double evaluate_objective(const ObjectiveTerms& terms, const std::vector<UnitSchedule>& schedules,
                          const Series& grid_import);

struct UnitVars {
    std::vector<std::size_t> pc, pd, soc, ci, dev, rd;
};

struct DispatchLp {
    LpProblem lp;
    std::vector<UnitLp> units;
    std::vector<UnitVars> vars;
    std::vector<std::size_t> grid;
    std::vector<std::size_t> balance_rows;
    bool has_ddu = false;
    std::vector<Series> ges_weight;                    ///< per unit and step, empty means 1
    std::vector<std::vector<std::size_t>> reserve;     ///< reserve variables per unit and step
    std::vector<Series> reserve_price;
};

/// Chance-constrained program with DIU tightening (M2) or, with stats == nullptr, the
/// deterministic program on the given units.
DispatchLp build_dispatch_lp(const ScenarioBundle& scn, std::vector<UnitLp> units, const BalanceLimits& bal,
                             const FInv* f_inv);
DispatchLp build_cco_diu(const ScenarioBundle& scn, const BoundStats& stats);
DispatchLp build_cco_ddu(const ScenarioBundle& scn, const BoundStats& stats, const FInv& f_inv);

// ---------------------------------------------------------------------------
// Strategies

struct RowDiagnostic {
    std::string name;
    double activity = 0.0;
    double dual = 0.0;
    double slack = 0.0;
};

struct TraceEntry {
    int iteration = 0;
    double objective = 0.0;
    double max_delta_f = 0.0;
};

struct SolveMetadata {
    ModelMode mode = ModelMode::M3;
    Reform reform = Reform::R1;
    std::string shape;
    int iterations = 0;
    int lp_iterations = 0;
    bool converged = true;
    bool aggregated = false;
};

struct DispatchStrategy {
    std::vector<std::string> unit_ids;
    std::vector<UnitSchedule> schedules;
    std::vector<Series> rd;
    Series grid_import;
    std::vector<Series> reserve; ///< per unit, empty without reserve
    double objective = 0.0;
    double ges_cost = 0.0;
    double grid_cost = 0.0;
    double reserve_cost = 0.0;
    std::vector<RowDiagnostic> diagnostics;
    std::vector<TraceEntry> trace;
    SolveMetadata meta;

    std::size_t horizon() const { return grid_import.size(); }
    double discharge_energy(double dt) const;
    double charge_energy(double dt) const;
    double reserve_energy(double dt) const;
};

/// Solves the assembled program and extracts a strategy with exact response discomfort.
DispatchStrategy solve_dispatch_lp(const ScenarioBundle& scn, const DispatchLp& dlp, const LpOptions& opts = {});

struct SolveConfig {
    ModelMode mode = ModelMode::M3;
    Reform reform = Reform::R1;
    ShapeClass shape{ShapeClass::Unimodal};
    double delta = 1e-3;
    int max_iter = 25;
    bool aggregate = false;       ///< A1
    bool limit_iterations = false; ///< A2
    bool robust_only = false;     ///< A3
    LpOptions lp;
};

/// Config populated from the scenario's mode and shape class.
SolveConfig default_config(const ScenarioBundle& scn);

DispatchStrategy solve_deterministic_m1(const ScenarioBundle& scn, const SolveConfig& cfg = {});
DispatchStrategy solve_cco_diu(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg = {});
DispatchStrategy robust_solve_r1(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg);

struct R2Result {
    DispatchStrategy strategy;
    std::vector<TraceEntry> trace;
    bool converged = false;
};

/// Thrown when the iteration cap is reached; carries the iterate with the smallest update.
class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& msg, R2Result best)
        : Error(ErrorKind::MaxIterationsExceeded, msg), best_(std::move(best)) {}
    const R2Result& best() const { return best_; }

private:
    R2Result best_;
};

R2Result iterative_solve_r2(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg);

/// Dispatches on cfg.mode / cfg.reform with acceleration flags applied.
DispatchStrategy solve(const ScenarioBundle& scn, const BoundStats& stats, const SolveConfig& cfg);

/// Energy-weighted virtual unit (A1).
GesParams aggregate_fleet(const std::vector<GesParams>& units);
UnitLp aggregate_units(const std::vector<UnitLp>& units);

/// Exact response discomfort of every unit of a strategy.
std::vector<Series> strategy_discomfort(const DispatchStrategy& s, const std::vector<GesParams>& params,
                                        const std::vector<DduSpec>& ddu);

} // namespace ges
