// Command-line front end: derive trigger parameters, run event-triggered
// simulations, compare triggering rules over seed batches, and validate
// runtime invariants. Exit codes: 0 success, 1 usage/config error,
// 2 infeasible design, 3 numerical failure, 4 invariant violation.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <etsync/etsync.hpp>

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "scenario config file (JSON)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory (created if missing)");
    cmd->add_option("--seed", args.seed, "override the config's initial-state seed");
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    return (fs::path(args.out_dir) / name).string();
}

int run_gains(const CommonArgs& args) {
    const etsync::ScenarioConfig cfg = etsync::load_config(args.config_path);
    const etsync::ScenarioArtifacts art = etsync::prepare_scenario(cfg);

    const std::string path = out_path(args, "gains.json");
    etsync::write_gains_report(path, art.spectrum, art.gains);

    std::cout << std::setprecision(10) << "lambda2=" << art.spectrum.lambda2()
              << " lambda_max=" << art.spectrum.lambda_max() << " alpha=" << art.gains.alpha
              << " rho=" << art.gains.rho << " tau_star=" << art.gains.tau_star << "\n"
              << "wrote " << path << "\n";
    return 0;
}

void print_invariants(const etsync::InvariantReport& report) {
    for (const etsync::InvariantCheck& c : report.checks) {
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << " worst="
                  << std::setprecision(6) << c.worst << " tol=" << c.tolerance;
        if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
        std::cout << "\n";
    }
}

int run_simulate(const CommonArgs& args, bool validate) {
    const etsync::ScenarioConfig cfg = etsync::load_config(args.config_path);
    const etsync::ScenarioArtifacts art = etsync::prepare_scenario(cfg);
    const etsync::SimulationRun run = etsync::run_scenario(cfg, art, args.seed);

    const std::string traj = out_path(args, "trajectory.csv");
    const std::string events = out_path(args, "events.csv");
    etsync::write_trajectory_csv(traj, run);
    etsync::write_events_csv(events, run);

    std::cout << std::setprecision(10) << "rule=" << etsync::rule_name(run.rule)
              << " events=" << run.events.size()
              << " initial_sync_norm=" << run.traces.sync_norm.front()
              << " final_sync_norm=" << run.traces.sync_norm.back() << "\n"
              << "wrote " << traj << " and " << events << "\n";

    if (validate) {
        const etsync::InvariantReport report =
            etsync::check_invariants(run, art.spectrum, art.design);
        print_invariants(report);
        if (!report.all_passed()) return 4;
    }
    return 0;
}

int run_compare(const CommonArgs& args) {
    const etsync::ScenarioConfig cfg = etsync::load_config(args.config_path);
    if (cfg.initial_states.explicit_values && cfg.compare_seeds != 1)
        throw etsync::config_error(
            "compare: explicit initial states require compare_seeds = 1");
    const etsync::ScenarioArtifacts art = etsync::prepare_scenario(cfg);

    etsync::RuleSpec ddt_spec = cfg.rule;
    ddt_spec.kind = "ddt";
    etsync::RuleSpec det_spec = cfg.rule;
    det_spec.kind = "det";

    // Comparison runs need only event logs and norm traces; skip state
    // snapshots to keep seed batches light.
    etsync::ScenarioConfig batch_cfg = cfg;
    batch_cfg.decimation = 0;

    const std::uint64_t base_seed = args.seed.value_or(cfg.initial_states.seed);
    std::vector<etsync::SeedComparison> rows;
    for (int s = 0; s < cfg.compare_seeds; ++s) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
        const etsync::SimulationRun ddt_run =
            etsync::run_scenario(batch_cfg, art, seed, ddt_spec);
        const etsync::SimulationRun det_run =
            etsync::run_scenario(batch_cfg, art, seed, det_spec);
        const etsync::ComparisonReport rep = etsync::compare_rules(ddt_run, det_run);

        etsync::SeedComparison row;
        row.seed = seed;
        row.ddt = rep.first;
        row.det = rep.second;
        row.initial_sync_norm = ddt_run.traces.sync_norm.front();
        rows.push_back(row);

        std::cout << std::setprecision(6) << "seed=" << seed
                  << " ddt_events=" << rep.first.total_events
                  << " det_events=" << rep.second.total_events
                  << " fewer=" << rep.fewer_events << "\n";
    }

    const std::string path = out_path(args, "comparison.json");
    etsync::write_comparison_report(path, rows);
    const etsync::json aggregate = etsync::comparison_report_json(rows)["aggregate"];
    std::cout << "aggregate: ddt_not_worse=" << aggregate["ddt_not_worse"].get<int>() << "/"
              << rows.size() << " verdict=" << aggregate["verdict"].get<std::string>() << "\n"
              << "wrote " << path << "\n";
    return 0;
}

int run_validate(const CommonArgs& args) {
    const etsync::ScenarioConfig cfg = etsync::load_config(args.config_path);
    const etsync::ScenarioArtifacts art = etsync::prepare_scenario(cfg);

    const etsync::SimulationRun run = etsync::run_scenario(cfg, art, args.seed);
    const etsync::SimulationRun reference =
        etsync::run_scenario(cfg, art, args.seed, {}, /*reference_formulation=*/true);

    const etsync::InvariantReport report =
        etsync::check_invariants(run, art.spectrum, art.design);
    print_invariants(report);

    const etsync::EquivalenceReport equiv = etsync::check_equivalence(run, reference);
    const bool equiv_ok = equiv.within(1e-9);
    std::cout << (equiv_ok ? "[PASS] " : "[FAIL] ") << "formulation_equivalence"
              << " max_state_dev=" << std::setprecision(6) << equiv.max_state_deviation
              << " max_payload_dev=" << equiv.max_payload_deviation
              << " events_match=" << (equiv.event_logs_match ? "yes" : "no");
    if (!equiv.mismatch_detail.empty()) std::cout << " (" << equiv.mismatch_detail << ")";
    std::cout << "\n";

    etsync::json doc = etsync::invariant_report_json(report);
    doc["equivalence"] = {{"event_logs_match", equiv.event_logs_match},
                          {"max_state_deviation", equiv.max_state_deviation},
                          {"max_payload_deviation", equiv.max_payload_deviation},
                          {"tolerance", 1e-9},
                          {"passed", equiv_ok}};
    const std::string path = out_path(args, "validation.json");
    std::ofstream out(path);
    if (!out) throw etsync::config_error("report: cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
    std::cout << "wrote " << path << "\n";

    return (report.all_passed() && equiv_ok) ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-triggered synchronization toolkit for linear dynamical networks"};
    app.require_subcommand(1);

    CommonArgs gains_args, sim_args, cmp_args, val_args;
    bool sim_validate = false;

    CLI::App* gains = app.add_subcommand("gains", "derive and report trigger parameters");
    add_common(gains, gains_args);

    CLI::App* simulate = app.add_subcommand("simulate", "run one event-triggered simulation");
    add_common(simulate, sim_args);
    simulate->add_flag("--validate", sim_validate,
                       "check runtime invariants; exit 4 on violation");

    CLI::App* compare =
        app.add_subcommand("compare", "run dwell-time vs decaying-threshold seed batch");
    add_common(compare, cmp_args);

    CLI::App* validate = app.add_subcommand(
        "validate", "run invariant checks plus the reference-formulation cross-check");
    add_common(validate, val_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gains->parsed()) return run_gains(gains_args);
        if (simulate->parsed()) return run_simulate(sim_args, sim_validate);
        if (compare->parsed()) return run_compare(cmp_args);
        return run_validate(val_args);
    } catch (const etsync::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const etsync::design_error& e) {
        std::cerr << "design error: " << e.what() << "\n";
        return 2;
    } catch (const etsync::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
