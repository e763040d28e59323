#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "etsync/errors.hpp"
#include "etsync/gains.hpp"
#include "etsync/graph.hpp"
#include "etsync/metrics.hpp"
#include "etsync/simulator.hpp"
#include "etsync/validate.hpp"

namespace etsync {

using json = nlohmann::json;

namespace detail {

// Shortest exact decimal form; guarantees byte-identical files for
// bit-identical runs and lossless reload of every value.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("report: cannot open '" + path + "' for writing");
    return out;
}

} // namespace detail

// Time-series table: one row per recorded snapshot with the per-node plant
// states followed by the scalar norm traces at that grid point.
inline void write_trajectory_csv(const std::string& path, const SimulationRun& run) {
    if (run.snapshot_stride <= 0 || run.snapshot_time.empty())
        throw config_error("report: run carries no state snapshots to tabulate");
    std::ofstream out = detail::open_out(path);

    out << "t";
    for (int i = 0; i < run.n_nodes; ++i)
        for (int d = 0; d < run.state_dim; ++d) out << ",x" << i << "_" << d;
    out << ",sync_norm,lyapunov_v,error_norm,zhat_norm\n";

    const std::size_t dim = static_cast<std::size_t>(run.state_dim);
    const std::size_t width = static_cast<std::size_t>(run.n_nodes) * dim;
    for (std::size_t s = 0; s < run.snapshot_time.size(); ++s) {
        // Snapshot s sits at grid index s * stride by construction.
        const std::size_t k = s * static_cast<std::size_t>(run.snapshot_stride);
        out << detail::fmt(run.snapshot_time[s]);
        for (std::size_t c = 0; c < width; ++c)
            out << ',' << detail::fmt(run.snap_x[s * width + c]);
        out << ',' << detail::fmt(run.traces.sync_norm[k]) << ','
            << detail::fmt(run.traces.lyapunov_v[k]) << ','
            << detail::fmt(run.traces.error_norm[k]) << ','
            << detail::fmt(run.traces.zhat_norm[k]) << '\n';
    }
}

inline void write_events_csv(const std::string& path, const SimulationRun& run) {
    std::ofstream out = detail::open_out(path);
    out << "t,node,error_norm,threshold\n";
    for (const EventRecord& ev : run.events)
        out << detail::fmt(ev.time) << ',' << ev.node << ',' << detail::fmt(ev.trigger_norm)
            << ',' << detail::fmt(ev.threshold) << '\n';
}

inline json gains_report_json(const LaplacianSpectrum& spectrum, const GainParameters& g) {
    return json{{"lambda2", spectrum.lambda2()},
                {"lambda_max", spectrum.lambda_max()},
                {"alpha", g.alpha},
                {"delta", g.delta},
                {"rho", g.rho},
                {"rho1", g.rho1},
                {"a", g.a},
                {"b", g.b},
                {"tau_star", g.tau_star},
                {"det_defaults", {{"c0", g.det_c0}, {"c1", g.det_c1}, {"gamma", g.det_gamma}}},
                {"feasible", true}};
}

inline void write_gains_report(const std::string& path, const LaplacianSpectrum& spectrum,
                               const GainParameters& g) {
    std::ofstream out = detail::open_out(path);
    out << gains_report_json(spectrum, g).dump(2) << '\n';
}

struct SeedComparison {
    std::uint64_t seed = 0;
    RuleTotals ddt;
    RuleTotals det;
    double initial_sync_norm = 0.0;
};

inline json comparison_report_json(const std::vector<SeedComparison>& rows) {
    json per_seed = json::array();
    int ddt_not_worse = 0;
    for (const SeedComparison& row : rows) {
        if (row.ddt.total_events <= row.det.total_events) ++ddt_not_worse;
        per_seed.push_back({{"seed", row.seed},
                            {"initial_sync_norm", row.initial_sync_norm},
                            {"ddt",
                             {{"total_events", row.ddt.total_events},
                              {"final_sync_norm", row.ddt.final_sync_norm},
                              {"tau_star", row.ddt.tau_star_used}}},
                            {"det",
                             {{"total_events", row.det.total_events},
                              {"final_sync_norm", row.det.final_sync_norm}}}});
    }
    return json{{"per_seed", per_seed},
                {"aggregate",
                 {{"seeds", rows.size()},
                  {"ddt_not_worse", ddt_not_worse},
                  {"verdict", ddt_not_worse * 2 >= static_cast<int>(rows.size())
                                  ? "ddt_samples_no_more"
                                  : "det_samples_fewer"}}}};
}

inline void write_comparison_report(const std::string& path,
                                    const std::vector<SeedComparison>& rows) {
    std::ofstream out = detail::open_out(path);
    out << comparison_report_json(rows).dump(2) << '\n';
}

inline json invariant_report_json(const InvariantReport& report) {
    json checks = json::array();
    for (const InvariantCheck& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"worst", c.worst},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
    return json{{"checks", checks}, {"all_passed", report.all_passed()}};
}

} // namespace etsync
