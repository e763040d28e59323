#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "etsync/gains.hpp"
#include "etsync/graph.hpp"
#include "etsync/metrics.hpp"
#include "etsync/numerics.hpp"
#include "etsync/simulator.hpp"

namespace etsync {

struct InvariantCheck {
    std::string name;
    bool passed = false;
    double worst = 0.0;     // worst observed margin (sign convention per check)
    double tolerance = 0.0; // the bound `worst` was compared against
    std::string detail;
};

struct InvariantReport {
    std::vector<InvariantCheck> checks;

    bool all_passed() const {
        for (const InvariantCheck& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

// Structural checks every finished run must satisfy, evaluated from the
// recorded traces. `worst` is always "measured minus allowed", so any
// positive value is a violation.
inline InvariantReport check_invariants(const SimulationRun& run,
                                        const LaplacianSpectrum& spectrum,
                                        const ControlDesign& design) {
    InvariantReport report;
    const TraceSeries& tr = run.traces;
    const double lambda_max = spectrum.lambda_max();
    const double lambda2 = spectrum.lambda2();
    const std::size_t points = tr.time.size();
    const std::size_t n_nodes = static_cast<std::size_t>(run.n_nodes);

    // Triangle bounds linking the disagreement estimate, the estimator
    // error, and the true disagreement: ||zhat|| <= lam_max(||e|| + ||y||)
    // and lam_2 ||y|| <= lam_max ||e|| + ||zhat||.
    {
        InvariantCheck upper{"zhat_upper_bound", true, -std::numeric_limits<double>::infinity(),
                             1e-9, ""};
        InvariantCheck lower{"disagreement_lower_bound", true,
                             -std::numeric_limits<double>::infinity(), 1e-9, ""};
        for (std::size_t k = 0; k < points; ++k) {
            const double y = tr.sync_norm[k], e = tr.error_norm[k], z = tr.zhat_norm[k];
            upper.worst = std::max(upper.worst, z - lambda_max * (e + y));
            lower.worst = std::max(lower.worst, lambda2 * y - (lambda_max * e + z));
        }
        upper.passed = upper.worst <= upper.tolerance;
        lower.passed = lower.worst <= lower.tolerance;
        report.checks.push_back(upper);
        report.checks.push_back(lower);
    }

    // Under the dwell-time rule the per-node error stays below the global
    // relative threshold, up to the one-step overshoot a grid detector can
    // accumulate before it reacts.
    if (const auto* ddt = std::get_if<DwellTimeRule>(&run.rule)) {
        InvariantCheck check{"relative_error_bound", true,
                             -std::numeric_limits<double>::infinity(), 0.0, ""};
        const double h_norm = spectral_norm(design.h);
        for (std::size_t k = 0; k < points; ++k) {
            const double slack = 10.0 * run.dt * h_norm * tr.max_estimator_norm[k];
            const double bound = ddt->rho * tr.zhat_norm[k] + slack;
            for (std::size_t i = 0; i < n_nodes; ++i)
                check.worst = std::max(check.worst,
                                       tr.node_error_norms[k * n_nodes + i] - bound);
        }
        check.passed = check.worst <= check.tolerance;
        report.checks.push_back(check);
    }

    // The quadratic certificate must not increase while the network is
    // meaningfully out of sync.
    {
        InvariantCheck check{"certificate_nonincreasing", true,
                             -std::numeric_limits<double>::infinity(), 1e-7, ""};
        for (std::size_t k = 0; k + 1 < points; ++k) {
            if (tr.sync_norm[k] <= 1e-6) continue;
            check.worst = std::max(check.worst, tr.lyapunov_v[k + 1] - tr.lyapunov_v[k]);
        }
        if (check.worst == -std::numeric_limits<double>::infinity()) check.worst = 0.0;
        check.passed = check.worst <= check.tolerance;
        report.checks.push_back(check);
    }

    // Dwell-time guarantee: no two events of one node closer than tau_star.
    if (const auto* ddt = std::get_if<DwellTimeRule>(&run.rule)) {
        InvariantCheck check{"dwell_time_respected", true,
                             -std::numeric_limits<double>::infinity(), 0.0, ""};
        const EventStats stats = inter_event_stats(run);
        double min_gap = std::numeric_limits<double>::infinity();
        for (const NodeEventStats& st : stats.per_node)
            if (st.has_gaps) min_gap = std::min(min_gap, st.tau_min);
        if (std::isfinite(min_gap)) {
            check.worst = ddt->tau_star - min_gap; // positive = violation
            std::ostringstream detail;
            detail << "min gap " << min_gap << " vs dwell " << ddt->tau_star;
            check.detail = detail.str();
        } else {
            check.worst = 0.0;
            check.detail = "no repeated events";
        }
        check.passed = check.worst <= check.tolerance;
        report.checks.push_back(check);
    }

    // After every jump the firing node's estimator error must be exactly
    // zero; verify from snapshots where available.
    if (run.snapshot_stride > 0 && !run.snapshot_time.empty()) {
        InvariantCheck check{"reset_zeroes_error", true, 0.0, 0.0, ""};
        const std::size_t dim = static_cast<std::size_t>(run.state_dim);
        std::size_t snap = 0;
        for (const EventRecord& ev : run.events) {
            while (snap + 1 < run.snapshot_time.size() &&
                   run.snapshot_time[snap] < ev.time)
                ++snap;
            if (run.snapshot_time[snap] != ev.time) continue;
            const std::size_t base = (snap * n_nodes + static_cast<std::size_t>(ev.node)) * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff =
                    std::abs(run.snap_x_hat[base + d] - run.snap_x[base + d]);
                check.worst = std::max(check.worst, diff);
            }
        }
        check.passed = check.worst <= check.tolerance;
        report.checks.push_back(check);
    }

    return report;
}

// Cross-formulation agreement: the two-estimator network against the
// per-neighbour-estimator reference. Both runs must share the grid and
// initial condition; the report captures the largest state deviation and
// whether the event sequences match.
struct EquivalenceReport {
    bool event_logs_match = false;
    double max_state_deviation = 0.0;   // over x, x_hat, x_hat_nbr snapshots
    double max_payload_deviation = 0.0;
    std::string mismatch_detail;

    bool within(double tol) const {
        return event_logs_match && max_state_deviation < tol && max_payload_deviation < tol;
    }
};

inline EquivalenceReport check_equivalence(const SimulationRun& a, const SimulationRun& b) {
    if (a.n_nodes != b.n_nodes || a.state_dim != b.state_dim || a.dt != b.dt ||
        a.t_end != b.t_end)
        throw config_error("check_equivalence: runs are not the same scenario");
    if (a.snapshot_stride != b.snapshot_stride || a.snapshot_time.size() != b.snapshot_time.size())
        throw config_error("check_equivalence: runs have different snapshot grids");

    EquivalenceReport rep;
    rep.event_logs_match = a.events.size() == b.events.size();
    if (!rep.event_logs_match) {
        std::ostringstream msg;
        msg << "event counts differ: " << a.events.size() << " vs " << b.events.size();
        rep.mismatch_detail = msg.str();
    }
    for (std::size_t i = 0; rep.event_logs_match && i < a.events.size(); ++i) {
        const EventRecord& ea = a.events[i];
        const EventRecord& eb = b.events[i];
        if (ea.time != eb.time || ea.node != eb.node) {
            rep.event_logs_match = false;
            std::ostringstream msg;
            msg << "event " << i << " differs: (t=" << ea.time << ", node=" << ea.node
                << ") vs (t=" << eb.time << ", node=" << eb.node << ")";
            rep.mismatch_detail = msg.str();
            break;
        }
        for (std::size_t d = 0; d < ea.payload.size(); ++d)
            rep.max_payload_deviation = std::max(
                rep.max_payload_deviation, std::abs(ea.payload[d] - eb.payload[d]));
    }

    auto span_dev = [](const std::vector<double>& u, const std::vector<double>& v) {
        double worst = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            worst = std::max(worst, std::abs(u[i] - v[i]));
        return worst;
    };
    rep.max_state_deviation = std::max({span_dev(a.snap_x, b.snap_x),
                                        span_dev(a.snap_x_hat, b.snap_x_hat),
                                        span_dev(a.snap_x_hat_nbr, b.snap_x_hat_nbr)});
    return rep;
}

} // namespace etsync
