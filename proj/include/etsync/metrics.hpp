#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "etsync/errors.hpp"
#include "etsync/simulator.hpp"

namespace etsync {

struct NodeEventStats {
    int node = 0;
    int count = 0;          // including the initial broadcast
    bool has_gaps = false;  // false when the node never fired again
    double tau_min = 0.0;   // smallest inter-event gap
    double tau_max = 0.0;   // largest inter-event gap
};

struct EventStats {
    std::vector<NodeEventStats> per_node;
    int total_events = 0;
};

// Per-node inter-event gap statistics. The gap from the initial broadcast
// to a node's first triggered event counts like any other gap.
inline EventStats inter_event_stats(const SimulationRun& run) {
    EventStats out;
    out.per_node.resize(run.n_nodes);
    std::vector<double> last(run.n_nodes, 0.0);
    std::vector<bool> seen(run.n_nodes, false);

    for (int i = 0; i < run.n_nodes; ++i) out.per_node[i].node = i;

    for (const EventRecord& ev : run.events) {
        NodeEventStats& st = out.per_node[ev.node];
        st.count += 1;
        out.total_events += 1;
        if (!seen[ev.node]) {
            seen[ev.node] = true; // the node's initial broadcast
        } else {
            const double gap = ev.time - last[ev.node];
            if (!st.has_gaps) {
                st.has_gaps = true;
                st.tau_min = st.tau_max = gap;
            } else {
                st.tau_min = std::min(st.tau_min, gap);
                st.tau_max = std::max(st.tau_max, gap);
            }
        }
        last[ev.node] = ev.time;
    }
    return out;
}

struct ConvergenceSummary {
    double initial_sync_norm = 0.0;
    double final_sync_norm = 0.0;
    // Fraction of grid steps with non-increasing V, counted only while the
    // disagreement norm is above the measurement floor.
    double v_nonincreasing_fraction = 1.0;
    std::size_t considered_steps = 0;
    std::vector<double> v_trace;
};

inline ConvergenceSummary convergence_summary(const SimulationRun& run) {
    ConvergenceSummary out;
    const TraceSeries& tr = run.traces;
    if (tr.sync_norm.empty()) throw config_error("convergence_summary: run has no traces");
    out.initial_sync_norm = tr.sync_norm.front();
    out.final_sync_norm = tr.sync_norm.back();
    out.v_trace = tr.lyapunov_v;

    std::size_t ok = 0;
    for (std::size_t k = 0; k + 1 < tr.lyapunov_v.size(); ++k) {
        if (tr.sync_norm[k] <= 1e-6) continue;
        out.considered_steps += 1;
        if (tr.lyapunov_v[k + 1] <= tr.lyapunov_v[k] + 1e-12) ++ok;
    }
    out.v_nonincreasing_fraction =
        out.considered_steps ? static_cast<double>(ok) / out.considered_steps : 1.0;
    return out;
}

struct RuleTotals {
    std::string rule;
    int total_events = 0;
    double final_sync_norm = 0.0;
    double tau_star_used = 0.0; // zero when the rule carries no dwell time
};

struct ComparisonReport {
    RuleTotals first;
    RuleTotals second;
    int delta_total_events = 0;        // first minus second
    double delta_final_sync_norm = 0.0; // first minus second
    std::string fewer_events;           // rule name, or "tie"
};

// Compare two runs of the same scenario under different rules. Refuses
// runs whose grids or initial conditions differ, since the totals would
// not be commensurable.
inline ComparisonReport compare_rules(const SimulationRun& a, const SimulationRun& b) {
    if (a.n_nodes != b.n_nodes || a.state_dim != b.state_dim)
        throw config_error("compare_rules: runs have different network shapes");
    if (a.dt != b.dt || a.t_end != b.t_end)
        throw config_error("compare_rules: runs have different time grids");
    if (a.initial_states.data() != b.initial_states.data())
        throw config_error("compare_rules: runs have different initial states");

    auto totals = [](const SimulationRun& run) {
        RuleTotals t;
        t.rule = rule_name(run.rule);
        t.total_events = static_cast<int>(run.events.size());
        t.final_sync_norm = run.traces.sync_norm.back();
        if (const auto* ddt = std::get_if<DwellTimeRule>(&run.rule)) t.tau_star_used = ddt->tau_star;
        return t;
    };

    ComparisonReport rep;
    rep.first = totals(a);
    rep.second = totals(b);
    rep.delta_total_events = rep.first.total_events - rep.second.total_events;
    rep.delta_final_sync_norm = rep.first.final_sync_norm - rep.second.final_sync_norm;
    if (rep.first.total_events < rep.second.total_events)
        rep.fewer_events = rep.first.rule;
    else if (rep.second.total_events < rep.first.total_events)
        rep.fewer_events = rep.second.rule;
    else
        rep.fewer_events = "tie";
    return rep;
}

} // namespace etsync
