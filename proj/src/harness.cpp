#include "gesdispatch/harness.hpp"

#include "gesdispatch/error.hpp"
#include "gesdispatch/fixtures.hpp"
#include "gesdispatch/scenario_io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#ifndef GESDISPATCH_VERSION
#define GESDISPATCH_VERSION "0.0.0"
#endif

namespace ges {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::string> config_issues(const RunConfig& cfg, const ScenarioBundle* scn) {
    std::vector<std::string> out;
    const ModelMode mode = cfg.mode.value_or(scn ? scn->mode : ModelMode::M3);
    if (cfg.reform == Reform::R2 && mode != ModelMode::M3) out.push_back("reformulation R2 requires model mode M3");
    if (cfg.reform == Reform::R2 && cfg.a3) out.push_back("A3 reverts to the robust reformulation and excludes R2");
    if (cfg.gamma && !(*cfg.gamma > 0 && *cfg.gamma < 1)) out.push_back("gamma must lie in (0, 1)");
    if (cfg.gamma_balance && !(*cfg.gamma_balance > 0 && *cfg.gamma_balance < 1))
        out.push_back("gamma_balance must lie in (0, 1)");
    if (!(cfg.delta > 0)) out.push_back("delta must be positive");
    if (cfg.max_iter < 1) out.push_back("max_iter must be at least 1");
    if (cfg.mcs_n < 10000) out.push_back("mcs_n must be at least 10000");
    if (cfg.eval_draws == 0) out.push_back("eval_draws must be positive");
    for (double g : cfg.gammas)
        if (!(g > 0 && g < 1)) out.push_back("sweep gamma " + format_number(g) + " outside (0, 1)");
    if (scn && cfg.dispatch_window)
        for (std::size_t t : *cfg.dispatch_window)
            if (t >= scn->horizon) out.push_back("dispatch window step " + std::to_string(t) + " outside the horizon");
    return out;
}

RunConfig normalize(RunConfig cfg, const ScenarioBundle* scn) {
    // A3 with an explicit R2 is reported as a conflict; otherwise A3 pins R1.
    auto issues = config_issues(cfg, scn);
    if (!issues.empty()) throw Error(ErrorKind::InvalidConfig, "inconsistent run configuration", issues);
    if (cfg.a2) cfg.max_iter = 2;
    if (cfg.a3) cfg.reform = Reform::R1;
    return cfg;
}

ScenarioBundle apply_overrides(ScenarioBundle scn, const RunConfig& cfg) {
    if (cfg.mode) scn.mode = *cfg.mode;
    if (cfg.shape) scn.shape = *cfg.shape;
    if (cfg.gamma) scn.gamma = *cfg.gamma;
    if (cfg.gamma_balance) scn.gamma_balance = *cfg.gamma_balance;
    if (cfg.dispatch_window) scn.dispatch_window = *cfg.dispatch_window;
    if (cfg.variant)
        for (auto& u : scn.units) u.ddu.variant = *cfg.variant;
    if (cfg.reserve) scn.reserve.mode = *cfg.reserve;
    return scn;
}

SolveConfig solve_config(const ScenarioBundle& scn, const RunConfig& cfg) {
    SolveConfig s = default_config(scn);
    s.reform = cfg.reform;
    s.delta = cfg.delta;
    s.max_iter = cfg.max_iter;
    s.aggregate = cfg.a1;
    s.limit_iterations = cfg.a2;
    s.robust_only = cfg.a3;
    return s;
}

fs::path default_out_dir() {
    const char* env = std::getenv("GESDISPATCH_OUT");
    return env && *env ? fs::path(env) : fs::path("out");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json series_json(const Series& s) { return json(s); }

Series series_from(const json& j, const std::string& key) {
    if (!j.contains(key)) return {};
    Series s;
    for (const auto& v : j.at(key)) s.push_back(v.is_null() ? kUnbounded : v.get<double>());
    return s;
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + file.string());
    out << text;
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json config_json(const RunConfig& c, const ScenarioBundle& scn) {
    json j;
    j["mode"] = to_string(scn.mode);
    j["reform"] = to_string(c.reform);
    j["shape"] = to_string(scn.shape);
    j["gamma"] = scn.gamma;
    j["gamma_balance"] = scn.balance_gamma();
    j["delta"] = c.delta;
    j["max_iter"] = c.max_iter;
    j["mcs_n"] = c.mcs_n;
    j["eval_draws"] = c.eval_draws;
    j["seed"] = c.seed;
    j["dispatch_window"] = scn.dispatch_window;
    j["variant"] = c.variant ? json(to_string(*c.variant)) : json(nullptr);
    j["acceleration"] = {{"A1", c.a1}, {"A2", c.a2}, {"A3", c.a3}};
    j["reserve"] = to_string(scn.reserve.mode);
    j["gammas"] = c.gammas;
    return j;
}

std::uint64_t stats_seed(const RunConfig& c) { return derive_seed(c.seed, {hash_string("bound-stats")}); }
std::uint64_t eval_seed(const RunConfig& c) { return derive_seed(c.seed, {hash_string("evaluate")}); }

fs::path write_manifest(const RunConfig& c, const ScenarioBundle* scn, const std::string& command,
                        const std::vector<fs::path>& artifacts) {
    json m;
    m["tool"] = "gesdispatch";
    m["version"] = GESDISPATCH_VERSION;
    m["command"] = command;
    if (scn) {
        m["scenario"] = {{"name", scn->name}, {"units", scn->units.size()}, {"horizon", scn->horizon}};
        m["config"] = config_json(c, *scn);
    }
    m["seeds"] = {{"master", c.seed}, {"bound_stats", stats_seed(c)}, {"evaluation", eval_seed(c)}};
    json files = json::array();
    for (const auto& a : artifacts) files.push_back(a.filename().string());
    m["artifacts"] = files;
    const fs::path p = c.out_dir / "manifest.json";
    write_text(p, m.dump(2) + "\n");
    return p;
}

void write_table(const fs::path& file, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
    write_csv(file, header, rows);
}

std::string num(double v) { return format_number(v); }

BoundStats stats_for(const ScenarioBundle& scn, const RunConfig& cfg) {
    return compute_bound_stats(scn, cfg.mcs_n, stats_seed(cfg));
}

} // namespace

std::string strategy_json(const DispatchStrategy& s) {
    json j;
    json units = json::array();
    for (std::size_t i = 0; i < s.schedules.size(); ++i) {
        json u;
        u["unit_id"] = s.unit_ids[i];
        u["p_c"] = series_json(s.schedules[i].p_c);
        u["p_d"] = series_json(s.schedules[i].p_d);
        u["soc"] = series_json(s.schedules[i].soc);
        u["rd"] = i < s.rd.size() ? series_json(s.rd[i]) : json::array();
        if (i < s.reserve.size()) u["reserve"] = series_json(s.reserve[i]);
        units.push_back(u);
    }
    j["units"] = units;
    j["grid_import"] = series_json(s.grid_import);
    j["objective"] = s.objective;
    j["ges_cost"] = s.ges_cost;
    j["grid_cost"] = s.grid_cost;
    j["reserve_cost"] = s.reserve_cost;
    j["meta"] = {{"mode", to_string(s.meta.mode)},
                 {"reform", to_string(s.meta.reform)},
                 {"shape", s.meta.shape},
                 {"iterations", s.meta.iterations},
                 {"lp_iterations", s.meta.lp_iterations},
                 {"converged", s.meta.converged},
                 {"aggregated", s.meta.aggregated}};
    json tr = json::array();
    for (const auto& e : s.trace) tr.push_back({{"iteration", e.iteration}, {"objective", e.objective}, {"max_delta_f", e.max_delta_f}});
    j["trace"] = tr;
    return j.dump(1) + "\n";
}

DispatchStrategy parse_strategy_json(const std::string& text) {
    DispatchStrategy s;
    try {
        const json j = json::parse(text);
        for (const auto& u : j.at("units")) {
            s.unit_ids.push_back(u.at("unit_id").get<std::string>());
            UnitSchedule sch;
            sch.p_c = series_from(u, "p_c");
            sch.p_d = series_from(u, "p_d");
            sch.soc = series_from(u, "soc");
            if (sch.p_c.size() != sch.p_d.size() || sch.soc.size() != sch.p_c.size() + 1)
                throw Error(ErrorKind::ParseError, "strategy unit " + s.unit_ids.back() + " has inconsistent lengths");
            s.schedules.push_back(std::move(sch));
            s.rd.push_back(series_from(u, "rd"));
            if (u.contains("reserve")) s.reserve.push_back(series_from(u, "reserve"));
        }
        s.grid_import = series_from(j, "grid_import");
        s.objective = j.at("objective").get<double>();
        s.ges_cost = j.value("ges_cost", 0.0);
        s.grid_cost = j.value("grid_cost", 0.0);
        s.reserve_cost = j.value("reserve_cost", 0.0);
        if (j.contains("meta")) {
            const json& m = j.at("meta");
            s.meta.mode = parse_model_mode(m.value("mode", std::string("M3")));
            s.meta.reform = parse_reform(m.value("reform", std::string("R1")));
            s.meta.shape = m.value("shape", std::string());
            s.meta.iterations = m.value("iterations", 0);
            s.meta.lp_iterations = m.value("lp_iterations", 0);
            s.meta.converged = m.value("converged", true);
            s.meta.aggregated = m.value("aggregated", false);
        }
        if (j.contains("trace"))
            for (const auto& e : j.at("trace"))
                s.trace.push_back({e.at("iteration").get<int>(), e.at("objective").get<double>(),
                                   e.at("max_delta_f").get<double>()});
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("strategy: ") + e.what());
    }
    return s;
}

void write_strategy(const DispatchStrategy& s, const fs::path& dir) {
    write_text(dir / "strategy.json", strategy_json(s));
    std::vector<std::vector<std::string>> rows;
    const std::size_t T = s.horizon();
    for (std::size_t i = 0; i < s.schedules.size(); ++i)
        for (std::size_t t = 0; t < T; ++t)
            rows.push_back({s.unit_ids[i], std::to_string(t), num(s.schedules[i].p_c[t]), num(s.schedules[i].p_d[t]),
                            num(s.schedules[i].soc[t + 1]), i < s.rd.size() ? num(s.rd[i][t]) : "",
                            i < s.reserve.size() ? num(s.reserve[i][t]) : ""});
    write_table(dir / "strategy.csv", {"unit_id", "t", "p_c", "p_d", "soc_next", "rd", "reserve"}, rows);
    rows.clear();
    for (std::size_t t = 0; t < T; ++t) rows.push_back({std::to_string(t), num(s.grid_import[t])});
    write_table(dir / "grid.csv", {"t", "grid_import"}, rows);
    rows.clear();
    for (const auto& d : s.diagnostics) rows.push_back({d.name, num(d.activity), num(d.dual), num(d.slack)});
    write_table(dir / "diagnostics.csv", {"row", "activity", "dual", "slack"}, rows);
}

DispatchStrategy read_strategy(const fs::path& file) { return parse_strategy_json(read_text(file)); }

std::string report_json(const ReliabilityReport& r) {
    json j;
    j["gamma"] = r.gamma;
    j["draws"] = r.draws;
    j["seed"] = r.seed;
    j["lorp"] = r.lorp;
    j["lorp_stderr"] = r.lorp_stderr;
    j["erns"] = r.erns;
    j["erns_total"] = r.erns_total;
    j["erns_abs_total"] = r.erns_abs_total;
    j["over_energy"] = r.over_energy;
    j["under_energy"] = r.under_energy;
    j["cost_da"] = r.cost_da;
    j["cost_rt"] = r.cost_rt;
    j["cost_tc"] = r.cost_tc;
    j["crossings"] = r.crossings;
    j["clipped"] = r.clipped;
    j["violation_freq"] = r.violation_freq;
    return j.dump(1) + "\n";
}

void write_report(const ReliabilityReport& r, const fs::path& dir) {
    write_text(dir / "report.json", report_json(r));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < r.erns.size(); ++t)
        rows.push_back({std::to_string(t), num(r.erns[t]), num(r.over_energy[t]), num(r.under_energy[t])});
    write_table(dir / "report.csv", {"t", "erns", "over_energy", "under_energy"}, rows);
}

void write_trace(const std::vector<TraceEntry>& trace, const fs::path& file) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : trace) rows.push_back({std::to_string(e.iteration), num(e.objective), num(e.max_delta_f)});
    write_table(file, {"iteration", "objective", "max_delta_f"}, rows);
}

std::vector<BoundsRow> bounds_table(const std::vector<double>& gammas) {
    const std::vector<ShapeClass> shapes = {{ShapeClass::NoAssumption}, {ShapeClass::Symmetric},
                                            {ShapeClass::Unimodal},     {ShapeClass::SymmetricUnimodal},
                                            ShapeClass::student_t(5.0), {ShapeClass::Normal}};
    std::vector<BoundsRow> out;
    for (const auto& s : shapes)
        for (double g : gammas) out.push_back({to_string(s), g, cantelli_bound(s, g)});
    return out;
}

// ---------------------------------------------------------------------------
// Pipelines

RunResult run_solve(const ScenarioBundle& base, const RunConfig& cfg0, bool evaluate, const std::string& command) {
    const RunConfig cfg = normalize(cfg0, &base);
    const ScenarioBundle scn = apply_overrides(base, cfg);
    require_valid(scn);
    fs::create_directories(cfg.out_dir);
    RunResult res;
    const BoundStats stats = stats_for(scn, cfg);
    const SolveConfig sc = solve_config(scn, cfg);
    DispatchStrategy s;
    bool hit_limit = false;
    std::string limit_msg;
    try {
        if (scn.reserve.mode != ReserveMode::None) s = solve_with_reserve(scn, stats, scn.reserve, sc);
        else s = solve(scn, stats, sc);
    } catch (const IterationLimitError& e) {
        s = e.best().strategy;
        hit_limit = true;
        limit_msg = e.what();
    }
    write_strategy(s, cfg.out_dir);
    res.artifacts = {cfg.out_dir / "strategy.json", cfg.out_dir / "strategy.csv", cfg.out_dir / "grid.csv",
                     cfg.out_dir / "diagnostics.csv"};
    if (!s.trace.empty()) {
        write_trace(s.trace, cfg.out_dir / "trace.csv");
        res.artifacts.push_back(cfg.out_dir / "trace.csv");
    }
    if (evaluate && !hit_limit) {
        const ReliabilityReport r = evaluate_reliability(s, scn, stats, cfg.eval_draws, eval_seed(cfg));
        write_report(r, cfg.out_dir);
        res.artifacts.push_back(cfg.out_dir / "report.json");
        res.artifacts.push_back(cfg.out_dir / "report.csv");
        res.report = r;
    }
    res.strategy = s;
    write_manifest(cfg, &scn, command, res.artifacts);
    if (hit_limit) throw Error(ErrorKind::MaxIterationsExceeded, limit_msg + " (best iterate written)");
    return res;
}

RunResult run_evaluate(const ScenarioBundle& base, const DispatchStrategy& strategy, const RunConfig& cfg0,
                       const std::string& command) {
    const RunConfig cfg = normalize(cfg0, &base);
    const ScenarioBundle scn = apply_overrides(base, cfg);
    require_valid(scn);
    fs::create_directories(cfg.out_dir);
    const BoundStats stats = stats_for(scn, cfg);
    RunResult res;
    const ReliabilityReport r = evaluate_reliability(strategy, scn, stats, cfg.eval_draws, eval_seed(cfg));
    write_report(r, cfg.out_dir);
    res.artifacts = {cfg.out_dir / "report.json", cfg.out_dir / "report.csv"};
    res.report = r;
    write_manifest(cfg, &scn, command, res.artifacts);
    return res;
}

RunResult run_bounds(const RunConfig& cfg, const std::string& command) {
    fs::create_directories(cfg.out_dir);
    const std::vector<double> gammas = cfg.gammas.empty() ? std::vector<double>{0.05} : cfg.gammas;
    std::vector<std::vector<std::string>> rows;
    for (const auto& b : bounds_table(gammas)) rows.push_back({b.shape, num(b.gamma), num(b.value)});
    RunResult res;
    write_table(cfg.out_dir / "bounds.csv", {"shape", "gamma", "bound"}, rows);
    res.artifacts = {cfg.out_dir / "bounds.csv"};
    write_manifest(cfg, nullptr, command, res.artifacts);
    return res;
}

RunResult run_sweep(const ScenarioBundle& base, const RunConfig& cfg0, const std::string& command) {
    const RunConfig cfg = normalize(cfg0, &base);
    const ScenarioBundle scn0 = apply_overrides(base, cfg);
    fs::create_directories(cfg.out_dir);
    const std::vector<double> gammas = cfg.gammas.empty() ? std::vector<double>{scn0.gamma} : cfg.gammas;
    std::vector<std::vector<std::string>> rows;
    for (double g : gammas) {
        ScenarioBundle scn = scn0;
        scn.gamma = g;
        require_valid(scn);
        const BoundStats stats = stats_for(scn, cfg);
        for (ModelMode m : cfg.sweep_modes) {
            SolveConfig sc = solve_config(scn, cfg);
            sc.mode = m;
            if (m != ModelMode::M3) sc.reform = Reform::R1;
            const DispatchStrategy s = solve(scn, stats, sc);
            const ReliabilityReport r = evaluate_reliability(s, scn, stats, cfg.eval_draws, eval_seed(cfg));
            const ContractionSummary c = contraction_summary(practical_model(s, scn, stats));
            rows.push_back({num(g), to_string(m), to_string(sc.reform), to_string(scn.shape), num(s.objective),
                            num(s.discharge_energy(scn.dt)), num(s.charge_energy(scn.dt)), num(r.lorp),
                            num(r.lorp_stderr), num(r.erns_total), num(r.erns_abs_total), num(r.cost_rt),
                            num(r.cost_tc), num(c.mean)});
        }
    }
    RunResult res;
    write_table(cfg.out_dir / "sweep.csv",
                {"gamma", "mode", "reform", "shape", "objective", "discharge_kwh", "charge_kwh", "lorp", "lorp_stderr",
                 "erns_total", "erns_abs_total", "cost_rt", "cost_tc", "contraction"},
                rows);
    res.artifacts = {cfg.out_dir / "sweep.csv"};
    write_manifest(cfg, &scn0, command, res.artifacts);
    return res;
}

RunResult run_reserve(const ScenarioBundle& base, const RunConfig& cfg0, const std::string& command) {
    const RunConfig cfg = normalize(cfg0, &base);
    const ScenarioBundle scn0 = apply_overrides(base, cfg);
    fs::create_directories(cfg.out_dir);
    const std::vector<double> gammas =
        cfg.gammas.empty() ? std::vector<double>{0.05, 0.30, 0.55, 0.80} : cfg.gammas;
    std::vector<ReserveMode> modes = {ReserveMode::S1_Deterministic, ReserveMode::S2_Probabilistic};
    if (cfg.reserve && *cfg.reserve != ReserveMode::None) modes = {*cfg.reserve};
    std::vector<std::vector<std::string>> rows;
    for (double g : gammas) {
        ScenarioBundle scn = scn0;
        scn.gamma = g;
        require_valid(scn);
        const BoundStats stats = stats_for(scn, cfg);
        SolveConfig sc = solve_config(scn, cfg);
        for (ReserveMode m : modes) {
            ReserveSpec spec = scn.reserve;
            spec.mode = m;
            const DispatchStrategy s = solve_with_reserve(scn, stats, spec, sc);
            const ReliabilityReport r = evaluate_reliability(s, scn, stats, cfg.eval_draws, eval_seed(cfg));
            rows.push_back({num(g), to_string(m), num(s.objective), num(s.ges_cost), num(s.grid_cost),
                            num(s.reserve_cost), num(s.charge_energy(scn.dt) + s.discharge_energy(scn.dt)),
                            num(s.reserve_energy(scn.dt)), num(r.lorp), num(r.cost_rt), num(r.cost_tc)});
        }
    }
    RunResult res;
    write_table(cfg.out_dir / "reserve.csv",
                {"gamma", "reserve_mode", "objective", "ges_cost", "grid_cost", "reserve_cost", "response_kwh",
                 "reserve_kwh", "lorp", "cost_rt", "cost_tc"},
                rows);
    res.artifacts = {cfg.out_dir / "reserve.csv"};
    write_manifest(cfg, &scn0, command, res.artifacts);
    return res;
}

RunResult run_generate(const fs::path& dir, const std::string& command) {
    RunResult res;
    for (const auto& scn : {smoke_fleet(), synthetic_100tcl()}) {
        require_valid(scn);
        save_scenario(scn, dir / scn.name);
        res.artifacts.push_back(dir / scn.name);
    }
    json m;
    m["tool"] = "gesdispatch";
    m["version"] = GESDISPATCH_VERSION;
    m["command"] = command;
    m["seeds"] = {{"smoke3", kSmokeSeed}, {"synthetic_100tcl", kFleetSeed}};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    return res;
}

void write_failure(const Error& e, const fs::path& dir) {
    fs::create_directories(dir);
    json j;
    j["error"] = to_string(e.kind());
    j["message"] = e.what();
    j["certificate"] = e.details();
    write_text(dir / "failure.json", j.dump(2) + "\n");
}

} // namespace ges
