// Command-line front end: solve, evaluate, bounds, sweep, reserve, generate.

#include "gesdispatch/error.hpp"
#include "gesdispatch/harness.hpp"
#include "gesdispatch/scenario_io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace ges;

std::vector<std::size_t> parse_window(const std::string& text) {
    if (text == "peak") return {19, 20, 21};
    if (text == "all") return {};
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash != std::string::npos) {
            const auto a = std::stoul(item.substr(0, dash)), b = std::stoul(item.substr(dash + 1));
            for (auto t = a; t <= b; ++t) out.push_back(t);
        } else {
            out.push_back(std::stoul(item));
        }
    }
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, "list"));
    return out;
}

struct Flags {
    std::string scenario;
    std::string strategy;
    std::string mode, reform = "R1", shape, variant, window, reserve, gammas, modes;
    std::optional<double> gamma, gamma_balance;
    double delta = 1e-3;
    int max_iter = 25;
    std::size_t mcs_n = 20000;
    std::size_t draws = 10000;
    std::uint64_t seed = 2024;
    bool a1 = false, a2 = false, a3 = false, evaluate = false;
    std::string out;
};

RunConfig to_config(const Flags& f) {
    RunConfig c;
    if (!f.mode.empty()) c.mode = parse_model_mode(f.mode);
    c.reform = parse_reform(f.reform);
    if (!f.shape.empty()) c.shape = parse_shape_class(f.shape);
    c.gamma = f.gamma;
    c.gamma_balance = f.gamma_balance;
    c.delta = f.delta;
    c.max_iter = f.max_iter;
    c.mcs_n = f.mcs_n;
    c.eval_draws = f.draws;
    c.seed = f.seed;
    if (!f.window.empty()) c.dispatch_window = parse_window(f.window);
    if (!f.variant.empty()) c.variant = parse_discomfort_variant(f.variant);
    c.a1 = f.a1;
    c.a2 = f.a2;
    c.a3 = f.a3;
    if (!f.reserve.empty()) c.reserve = parse_reserve_mode(f.reserve);
    if (!f.gammas.empty()) c.gammas = parse_list(f.gammas);
    if (!f.modes.empty()) {
        c.sweep_modes.clear();
        std::stringstream ss(f.modes);
        std::string item;
        while (std::getline(ss, item, ',')) c.sweep_modes.push_back(parse_model_mode(item));
    }
    c.out_dir = f.out.empty() ? default_out_dir() : std::filesystem::path(f.out);
    return c;
}

void add_run_flags(CLI::App* app, Flags& f) {
    app->add_option("--scenario", f.scenario, "Scenario directory")->required();
    app->add_option("--mode", f.mode, "Model mode M1, M2 or M3");
    app->add_option("--reform", f.reform, "Reformulation R1 or R2");
    app->add_option("--shape", f.shape, "Shape class: na, s, u, su, normal, t<nu>");
    app->add_option("--gamma", f.gamma, "Risk level");
    app->add_option("--gamma-balance", f.gamma_balance, "Risk level of the power balance");
    app->add_option("--delta", f.delta, "R2 stopping tolerance");
    app->add_option("--max-iter", f.max_iter, "R2 iteration cap");
    app->add_option("--mcs-n", f.mcs_n, "Samples per uncertain bound");
    app->add_option("--draws", f.draws, "Ex-post realizations");
    app->add_option("--seed", f.seed, "Master seed");
    app->add_option("--window", f.window, "Dispatch window: all, peak or a list like 19-21");
    app->add_option("--variant", f.variant, "Discomfort variant F1, F2 or F3 for every unit");
    app->add_flag("--a1", f.a1, "Aggregate the fleet");
    app->add_flag("--a2", f.a2, "Limit R2 to two iterations");
    app->add_flag("--a3", f.a3, "Use the robust reformulation only");
    app->add_option("--reserve", f.reserve, "Reserve mode none, S1 or S2");
    app->add_option("--out", f.out, "Output directory (default $GESDISPATCH_OUT or ./out)");
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Day-ahead dispatch of generic energy storage fleets under uncertainty"};
    app.require_subcommand(1);
    Flags f;
    const std::string cmd = command_line(argc, argv);

    auto* solve = app.add_subcommand("solve", "Solve the dispatch program");
    add_run_flags(solve, f);
    solve->add_flag("--evaluate", f.evaluate, "Evaluate reliability of the solution");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a stored strategy");
    add_run_flags(evaluate, f);
    evaluate->add_option("--strategy", f.strategy, "strategy.json to evaluate")->required();

    auto* bounds = app.add_subcommand("bounds", "Tabulate quantile bounds for all shape classes");
    bounds->add_option("--gammas", f.gammas, "Comma-separated risk levels")->required();
    bounds->add_option("--out", f.out, "Output directory");

    auto* sweep = app.add_subcommand("sweep", "Solve and evaluate over risk levels and model modes");
    add_run_flags(sweep, f);
    sweep->add_option("--gammas", f.gammas, "Comma-separated risk levels");
    sweep->add_option("--modes", f.modes, "Comma-separated model modes");

    auto* reserve = app.add_subcommand("reserve", "Compare deterministic and probabilistic reserve");
    add_run_flags(reserve, f);
    reserve->add_option("--gammas", f.gammas, "Comma-separated risk levels");

    auto* generate = app.add_subcommand("generate", "Write the bundled synthetic scenarios");
    generate->add_option("--out", f.out, "Fixture directory")->required();

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        cfg = to_config(f);
        RunResult r;
        if (generate->parsed()) {
            r = run_generate(f.out, cmd);
        } else if (bounds->parsed()) {
            r = run_bounds(cfg, cmd);
        } else {
            const ScenarioBundle scn = load_scenario(f.scenario);
            if (solve->parsed()) r = run_solve(scn, cfg, f.evaluate, cmd);
            else if (evaluate->parsed()) r = run_evaluate(scn, read_strategy(f.strategy), cfg, cmd);
            else if (sweep->parsed()) r = run_sweep(scn, cfg, cmd);
            else r = run_reserve(scn, cfg, cmd);
        }
        if (r.strategy) std::cout << "objective " << format_number(r.strategy->objective) << "\n";
        if (r.report)
            std::cout << "lorp " << format_number(r.report->lorp) << " cost_rt " << format_number(r.report->cost_rt)
                      << "\n";
        for (const auto& a : r.artifacts) std::cout << "wrote " << a.string() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
        try {
            write_failure(e, cfg.out_dir);
        } catch (const std::exception&) {
        }
        switch (e.kind()) {
        case ErrorKind::Infeasible:
        case ErrorKind::InfeasibleBounds: return 2;
        case ErrorKind::MaxIterationsExceeded: return 3;
        case ErrorKind::InvalidConfig:
        case ErrorKind::ParseError:
        case ErrorKind::ValidationError:
        case ErrorKind::EmptyFleet: return 64;
        default: return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
