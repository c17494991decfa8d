#pragma once

// Run configuration, pipelines and artifact serialization behind the CLI.

#include "gesdispatch/dispatch.hpp"
#include "gesdispatch/reliability.hpp"
#include "gesdispatch/reserve.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ges {

struct RunConfig {
    std::optional<ModelMode> mode;          ///< scenario value when unset
    Reform reform = Reform::R1;
    std::optional<ShapeClass> shape;
    std::optional<double> gamma;
    std::optional<double> gamma_balance;
    double delta = 1e-3;
    int max_iter = 25;
    std::size_t mcs_n = 20000;              ///< samples per uncertain bound
    std::size_t eval_draws = 10000;         ///< ex-post realizations
    std::uint64_t seed = 2024;
    std::optional<std::vector<std::size_t>> dispatch_window;
    std::optional<DiscomfortVariant> variant;
    bool a1 = false;
    bool a2 = false;
    bool a3 = false;
    std::optional<ReserveMode> reserve;
    std::filesystem::path out_dir = "out";
    std::vector<double> gammas;             ///< bounds / sweep / reserve grids
    std::vector<ModelMode> sweep_modes = {ModelMode::M1, ModelMode::M2, ModelMode::M3};
};

/// Every inconsistency between flags (R2 requires M3, positive limits, ...).
std::vector<std::string> config_issues(const RunConfig& cfg, const ScenarioBundle* scn = nullptr);
/// Applies implied settings (A2: max_iter = 2, A3: R1) after checking consistency.
RunConfig normalize(RunConfig cfg, const ScenarioBundle* scn = nullptr);

/// Scenario with the run's overrides (gamma, window, variant, mode, shape, reserve).
ScenarioBundle apply_overrides(ScenarioBundle scn, const RunConfig& cfg);
SolveConfig solve_config(const ScenarioBundle& scn, const RunConfig& cfg);

/// Output directory from GESDISPATCH_OUT, or "out".
std::filesystem::path default_out_dir();

// ---------------------------------------------------------------------------
// Serialization

std::string strategy_json(const DispatchStrategy& s);
DispatchStrategy parse_strategy_json(const std::string& text);
void write_strategy(const DispatchStrategy& s, const std::filesystem::path& dir);
DispatchStrategy read_strategy(const std::filesystem::path& file);
std::string report_json(const ReliabilityReport& r);
void write_report(const ReliabilityReport& r, const std::filesystem::path& dir);
void write_trace(const std::vector<TraceEntry>& trace, const std::filesystem::path& file);

/// Cantelli bounds for every shape class at every gamma.
struct BoundsRow {
    std::string shape;
    double gamma = 0.0;
    double value = 0.0;
};
std::vector<BoundsRow> bounds_table(const std::vector<double>& gammas);

// ---------------------------------------------------------------------------
// Pipelines. Each writes its artifacts plus manifest.json into cfg.out_dir.

struct RunResult {
    std::vector<std::filesystem::path> artifacts;
    std::optional<DispatchStrategy> strategy;
    std::optional<ReliabilityReport> report;
};

RunResult run_solve(const ScenarioBundle& scn, const RunConfig& cfg, bool evaluate, const std::string& command);
RunResult run_evaluate(const ScenarioBundle& scn, const DispatchStrategy& strategy, const RunConfig& cfg,
                       const std::string& command);
RunResult run_bounds(const RunConfig& cfg, const std::string& command);
RunResult run_sweep(const ScenarioBundle& scn, const RunConfig& cfg, const std::string& command);
RunResult run_reserve(const ScenarioBundle& scn, const RunConfig& cfg, const std::string& command);
RunResult run_generate(const std::filesystem::path& dir, const std::string& command);

/// Writes the infeasibility certificate of a failed solve.
void write_failure(const Error& e, const std::filesystem::path& dir);

} // namespace ges
