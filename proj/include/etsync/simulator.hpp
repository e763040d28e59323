#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "etsync/errors.hpp"
#include "etsync/gains.hpp"
#include "etsync/graph.hpp"
#include "etsync/matrix.hpp"
#include "etsync/numerics.hpp"

namespace etsync {

// --- Triggering rules -------------------------------------------------

// Relative threshold with a guaranteed dwell time: a node may fire only
// once tau_star has elapsed since its last event AND its estimator error
// strictly exceeds rho times its local disagreement estimate.
struct DwellTimeRule {
    double rho = 0.0;
    double tau_star = 0.0;
};

// Absolute threshold decaying in time, independent of neighbour state.
struct DecayThresholdRule {
    double c0 = 0.0;
    double c1 = 0.0;
    double gamma = 0.0;
};

// The relative rule with no dwell time. Kept as a demonstration of why the
// dwell time matters: near consensus it fires on every grid point, and the
// shrinking gaps are the discrete shadow of Zeno behaviour.
struct NaiveRelativeRule {
    double rho = 0.0;
};

using TriggerRule = std::variant<DwellTimeRule, DecayThresholdRule, NaiveRelativeRule>;

inline const char* rule_name(const TriggerRule& rule) {
    if (std::holds_alternative<DwellTimeRule>(rule)) return "ddt";
    if (std::holds_alternative<DecayThresholdRule>(rule)) return "det";
    return "naive";
}

inline void validate_rule(const TriggerRule& rule) {
    if (const auto* ddt = std::get_if<DwellTimeRule>(&rule)) {
        if (!(ddt->rho > 0.0)) throw config_error("rule: rho must be positive");
        if (!(ddt->tau_star > 0.0)) throw config_error("rule: tau_star must be positive");
    } else if (const auto* det = std::get_if<DecayThresholdRule>(&rule)) {
        if (det->c0 < 0.0 || det->c1 < 0.0)
            throw config_error("rule: c0 and c1 must be non-negative");
        if (det->c0 == 0.0 && det->c1 == 0.0)
            throw config_error("rule: c0 and c1 must not both be zero");
        if (!(det->gamma > 0.0)) throw config_error("rule: gamma must be positive");
    } else {
        if (!(std::get<NaiveRelativeRule>(rule).rho > 0.0))
            throw config_error("rule: rho must be positive");
    }
}

// --- Per-node runtime state --------------------------------------------

struct NodeRuntime {
    Vec x;          // plant state
    Vec x_hat;      // own-state estimator, reset to x at own events
    Vec x_hat_nbr;  // neighbour-sum estimator, corrected by received payloads
    double last_event_time = 0.0;
    int event_count = 0;
};

// Local disagreement estimate: neighbour-sum estimate minus degree times
// the node's own estimate. Built only from quantities the node holds.
inline Vec zhat_vector(const NodeRuntime& node, int degree) {
    Vec z(node.x_hat.size());
    for (std::size_t d = 0; d < z.size(); ++d)
        z[d] = node.x_hat_nbr[d] - static_cast<double>(degree) * node.x_hat[d];
    return z;
}

// --- Run records --------------------------------------------------------

struct EventRecord {
    double time = 0.0;
    int node = 0;
    Vec payload;            // broadcast estimator error, sampled just before the reset
    double trigger_norm = 0.0; // its Euclidean norm
    double threshold = 0.0;    // rule threshold at the firing instant
};

// Norm traces sampled at every grid point (post-jump values).
struct TraceSeries {
    std::vector<double> time;
    std::vector<double> sync_norm;          // disagreement norm of the plant states
    std::vector<double> lyapunov_v;         // quadratic certificate over disagreement modes
    std::vector<double> error_norm;         // stacked estimator-error norm
    std::vector<double> zhat_norm;          // stacked disagreement-estimate norm
    std::vector<double> max_estimator_norm; // max_i of the own-estimator norm
    std::vector<double> node_error_norms;   // grid-major, [step * n_nodes + i]
};

struct SimulationOptions {
    double dt = 1e-4;
    double t_end = 0.0;
    int snapshot_stride = 1; // 0 disables state snapshots
};

struct SimulationRun {
    int n_nodes = 0;
    int state_dim = 0;
    double dt = 0.0;
    double t_end = 0.0;
    TriggerRule rule;
    int snapshot_stride = 1;
    Matrix initial_states; // N x n

    TraceSeries traces;
    std::vector<EventRecord> events;

    std::vector<double> snapshot_time;
    // Flattened [snapshot][node][dim] states at strided grid points.
    std::vector<double> snap_x, snap_x_hat, snap_x_hat_nbr;

    std::size_t grid_points() const { return traces.time.size(); }
    std::size_t snapshots() const { return snapshot_time.size(); }
};

// --- Initialisation ------------------------------------------------------

// Well-initialised network at t0 = 0: estimators start at zero, every node
// immediately broadcasts, so after the initial exchange each own-estimator
// equals the true state and each neighbour-sum estimator holds the exact
// sum of neighbour states. That initial broadcast counts as event one.
inline std::vector<NodeRuntime> initialize(const ControlDesign& design,
                                           const Topology& topology,
                                           const Matrix& initial_states) {
    design.validate();
    const int n_nodes = topology.n_nodes;
    const std::size_t dim = design.state_dim();
    if (static_cast<int>(initial_states.rows()) != n_nodes)
        throw config_error("initialize: initial state rows must match node count");
    if (initial_states.cols() != dim)
        throw config_error("initialize: initial state columns must match state dimension");
    for (double v : initial_states.data())
        if (!std::isfinite(v))
            throw config_error("initialize: initial states must be finite");

    std::vector<NodeRuntime> nodes(n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        NodeRuntime& node = nodes[i];
        node.x.resize(dim);
        node.x_hat.resize(dim);
        node.x_hat_nbr.assign(dim, 0.0);
        for (std::size_t d = 0; d < dim; ++d) {
            node.x[d] = initial_states(i, d);
            node.x_hat[d] = initial_states(i, d);
        }
        for (int j = 0; j < n_nodes; ++j) {
            if (!topology.has_edge(i, j)) continue;
            for (std::size_t d = 0; d < dim; ++d)
                node.x_hat_nbr[d] += initial_states(j, d);
        }
        node.last_event_time = 0.0;
        node.event_count = 1;
    }
    return nodes;
}

// --- Continuous flow ------------------------------------------------------

// Advance all nodes one grid step. Between events every node is
// self-contained: the plant sees only the node's own estimators through
// u_i, and both estimators drift under the open dynamics. Coupling enters
// exclusively through the event jumps, so each node integrates its own
// 3n-dimensional block.
inline void flow_step(std::vector<NodeRuntime>& nodes, const ControlDesign& design,
                      const Topology& topology, double t, double dt) {
    const std::size_t dim = design.state_dim();
    const Matrix& h = design.h;

    for (int i = 0; i < topology.n_nodes; ++i) {
        NodeRuntime& node = nodes[static_cast<std::size_t>(i)];
        const double degree = static_cast<double>(topology.degree(i));

        Vec stacked(3 * dim);
        for (std::size_t d = 0; d < dim; ++d) {
            stacked[d] = node.x[d];
            stacked[dim + d] = node.x_hat[d];
            stacked[2 * dim + d] = node.x_hat_nbr[d];
        }

        auto deriv = [&](double, const Vec& s) {
            Vec ds(3 * dim);
            double u = 0.0;
            for (std::size_t d = 0; d < dim; ++d)
                u += design.k[d] * (s[2 * dim + d] - degree * s[dim + d]);
            for (std::size_t r = 0; r < dim; ++r) {
                double hx = 0.0, hxh = 0.0, hxv = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    hx += h(r, c) * s[c];
                    hxh += h(r, c) * s[dim + c];
                    hxv += h(r, c) * s[2 * dim + c];
                }
                ds[r] = hx + design.b[r] * u;
                ds[dim + r] = hxh;
                ds[2 * dim + r] = hxv;
            }
            return ds;
        };

        const Vec next = rk4_step(deriv, t, stacked, dt);
        for (std::size_t d = 0; d < dim; ++d) {
            node.x[d] = next[d];
            node.x_hat[d] = next[dim + d];
            node.x_hat_nbr[d] = next[2 * dim + d];
        }
    }
}

// --- Trigger evaluation ----------------------------------------------------

inline bool check_trigger(const NodeRuntime& node, const TriggerRule& rule, double t,
                          const Vec& zhat) {
    Vec e(node.x.size());
    for (std::size_t d = 0; d < e.size(); ++d) e[d] = node.x_hat[d] - node.x[d];
    const double err = norm2(e);

    if (const auto* ddt = std::get_if<DwellTimeRule>(&rule)) {
        // Gate on the same subtraction that later becomes the logged gap,
        // so recorded inter-event gaps satisfy the dwell bound exactly.
        if (!((t - node.last_event_time) >= ddt->tau_star)) return false;
        return err > ddt->rho * norm2(zhat);
    }
    if (const auto* det = std::get_if<DecayThresholdRule>(&rule))
        return err > det->c0 + det->c1 * std::exp(-det->gamma * t);
    return err >= std::get<NaiveRelativeRule>(rule).rho * norm2(zhat);
}

// Threshold value the rule compares against at time t (for event logging).
inline double rule_threshold(const NodeRuntime& node, const TriggerRule& rule, double t,
                             const Vec& zhat) {
    if (const auto* ddt = std::get_if<DwellTimeRule>(&rule))
        return ddt->rho * norm2(zhat);
    if (const auto* det = std::get_if<DecayThresholdRule>(&rule))
        return det->c0 + det->c1 * std::exp(-det->gamma * t);
    return std::get<NaiveRelativeRule>(rule).rho * norm2(zhat);
}

// --- Event jumps -------------------------------------------------------------

// Apply all events firing at the same instant. Payloads are sampled before
// any state changes, then every firing node resets its own estimator and
// every neighbour subtracts the received payload from its neighbour-sum
// estimate. Returns the payloads in the order of `triggered`.
inline std::vector<Vec> apply_events(std::vector<NodeRuntime>& nodes,
                                     const std::vector<int>& triggered,
                                     const Topology& topology, double t) {
    const std::size_t dim = nodes.empty() ? 0 : nodes.front().x.size();

    std::vector<Vec> payloads;
    payloads.reserve(triggered.size());
    for (int j : triggered) {
        const NodeRuntime& node = nodes[static_cast<std::size_t>(j)];
        Vec e(dim);
        for (std::size_t d = 0; d < dim; ++d) e[d] = node.x_hat[d] - node.x[d];
        payloads.push_back(std::move(e));
    }

    for (std::size_t idx = 0; idx < triggered.size(); ++idx) {
        NodeRuntime& node = nodes[static_cast<std::size_t>(triggered[idx])];
        node.x_hat = node.x;
        node.last_event_time = t;
        node.event_count += 1;
    }

    for (int i = 0; i < topology.n_nodes; ++i) {
        NodeRuntime& node = nodes[static_cast<std::size_t>(i)];
        for (std::size_t idx = 0; idx < triggered.size(); ++idx) {
            if (!topology.has_edge(i, triggered[idx])) continue;
            for (std::size_t d = 0; d < dim; ++d)
                node.x_hat_nbr[d] -= payloads[idx][d];
        }
    }
    return payloads;
}

// --- Disagreement measures -----------------------------------------------

struct SyncError {
    double sync_norm = 0.0;
    Vec y; // stacked (N-1) x n disagreement coordinates
};

// Basis-free disagreement norm: sqrt(sum_i ||x_i - mean||^2). Equal to the
// norm of the reduced-basis coordinates, but needs no eigenvectors.
inline double deviation_sync_norm(const std::vector<NodeRuntime>& nodes) {
    if (nodes.empty()) return 0.0;
    const std::size_t dim = nodes.front().x.size();
    Vec mean(dim, 0.0);
    for (const NodeRuntime& node : nodes)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += node.x[d];
    for (double& v : mean) v /= static_cast<double>(nodes.size());
    double s = 0.0;
    for (const NodeRuntime& node : nodes)
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = node.x[d] - mean[d];
            s += diff * diff;
        }
    return std::sqrt(s);
}

inline SyncError sync_error(const std::vector<NodeRuntime>& nodes,
                            const LaplacianSpectrum& spectrum) {
    const std::size_t n_nodes = nodes.size();
    const std::size_t dim = nodes.empty() ? 0 : nodes.front().x.size();
    SyncError out;
    out.y.assign((n_nodes - 1) * dim, 0.0);
    for (std::size_t m = 0; m + 1 < n_nodes; ++m)
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const double w = spectrum.reduced_basis(i, m);
            for (std::size_t d = 0; d < dim; ++d)
                out.y[m * dim + d] += w * nodes[i].x[d];
        }
    out.sync_norm = deviation_sync_norm(nodes);
    return out;
}

// --- Full hybrid runs ---------------------------------------------------------

namespace detail {

inline void record_traces(SimulationRun& run, const std::vector<NodeRuntime>& nodes,
                          const Topology& topology, const LaplacianSpectrum& spectrum,
                          const ModeSet& modes, double t) {
    const std::size_t n_nodes = nodes.size();
    const std::size_t dim = nodes.front().x.size();
    TraceSeries& tr = run.traces;

    tr.time.push_back(t);
    tr.sync_norm.push_back(deviation_sync_norm(nodes));

    // V = sum over disagreement modes of y_m^T P_m y_m with y = basis^T x.
    double v = 0.0;
    Vec y_m(dim);
    for (std::size_t m = 0; m + 1 < n_nodes; ++m) {
        std::fill(y_m.begin(), y_m.end(), 0.0);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const double w = spectrum.reduced_basis(i, m);
            for (std::size_t d = 0; d < dim; ++d) y_m[d] += w * nodes[i].x[d];
        }
        const Matrix& p = modes.modes[m].p;
        for (std::size_t r = 0; r < dim; ++r) {
            double pr = 0.0;
            for (std::size_t c = 0; c < dim; ++c) pr += p(r, c) * y_m[c];
            v += y_m[r] * pr;
        }
    }
    tr.lyapunov_v.push_back(v);

    double err_sq = 0.0, zhat_sq = 0.0, max_est = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const NodeRuntime& node = nodes[i];
        double e_sq = 0.0, est_sq = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double e = node.x_hat[d] - node.x[d];
            e_sq += e * e;
            est_sq += node.x_hat[d] * node.x_hat[d];
        }
        tr.node_error_norms.push_back(std::sqrt(e_sq));
        err_sq += e_sq;
        max_est = std::max(max_est, std::sqrt(est_sq));

        const Vec z = zhat_vector(node, topology.degree(static_cast<int>(i)));
        zhat_sq += dot(z, z);
    }
    tr.error_norm.push_back(std::sqrt(err_sq));
    tr.zhat_norm.push_back(std::sqrt(zhat_sq));
    tr.max_estimator_norm.push_back(max_est);
}

inline void record_snapshot(SimulationRun& run, const std::vector<NodeRuntime>& nodes,
                            double t) {
    run.snapshot_time.push_back(t);
    for (const NodeRuntime& node : nodes) {
        run.snap_x.insert(run.snap_x.end(), node.x.begin(), node.x.end());
        run.snap_x_hat.insert(run.snap_x_hat.end(), node.x_hat.begin(), node.x_hat.end());
        run.snap_x_hat_nbr.insert(run.snap_x_hat_nbr.end(), node.x_hat_nbr.begin(),
                                  node.x_hat_nbr.end());
    }
}

inline void validate_run_inputs(const ControlDesign& design, const Topology& topology,
                                const TriggerRule& rule, const Matrix& initial_states,
                                const SimulationOptions& options) {
    design.validate();
    validate_rule(rule);
    if (!(options.dt > 0.0)) throw config_error("simulate: dt must be positive");
    if (!(options.t_end > 0.0)) throw config_error("simulate: t_end must be positive");
    if (options.snapshot_stride < 0)
        throw config_error("simulate: snapshot stride must be non-negative");
    if (const auto* ddt = std::get_if<DwellTimeRule>(&rule)) {
        if (options.dt > ddt->tau_star / 5.0) {
            std::ostringstream msg;
            msg << "simulate: dt=" << options.dt
                << " too coarse to resolve the dwell time; need dt <= tau_star/5 = "
                << ddt->tau_star / 5.0;
            throw config_error(msg.str());
        }
    }
    if (static_cast<int>(initial_states.rows()) != topology.n_nodes ||
        initial_states.cols() != design.state_dim())
        throw config_error("simulate: initial state shape must be n_nodes x state_dim");
}

} // namespace detail

// Event-triggered run of the two-estimator network on a fixed time grid.
// Events are detected at grid points: after each continuous step, every
// node's rule is evaluated, all firing nodes jump simultaneously with
// pre-jump payloads, and traces record the post-jump values.
inline SimulationRun simulate(const ControlDesign& design, const Topology& topology,
                              const LaplacianSpectrum& spectrum, const ModeSet& modes,
                              const TriggerRule& rule, const Matrix& initial_states,
                              const SimulationOptions& options) {
    detail::validate_run_inputs(design, topology, rule, initial_states, options);

    const int n_nodes = topology.n_nodes;
    const std::size_t dim = design.state_dim();
    const long long steps = std::llround(options.t_end / options.dt);
    if (steps < 1) throw config_error("simulate: horizon shorter than one grid step");

    SimulationRun run;
    run.n_nodes = n_nodes;
    run.state_dim = static_cast<int>(dim);
    run.dt = options.dt;
    run.t_end = options.t_end;
    run.rule = rule;
    run.snapshot_stride = options.snapshot_stride;
    run.initial_states = initial_states;

    std::vector<NodeRuntime> nodes = initialize(design, topology, initial_states);

    std::vector<int> degrees(n_nodes);
    for (int i = 0; i < n_nodes; ++i) degrees[i] = topology.degree(i);

    // The initial broadcast: payload is the pre-reset estimator error
    // (zero estimator minus true state), threshold evaluated post-reset.
    for (int i = 0; i < n_nodes; ++i) {
        EventRecord rec;
        rec.time = 0.0;
        rec.node = i;
        rec.payload.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) rec.payload[d] = -initial_states(i, d);
        rec.trigger_norm = norm2(rec.payload);
        rec.threshold = rule_threshold(nodes[i], rule, 0.0, zhat_vector(nodes[i], degrees[i]));
        run.events.push_back(std::move(rec));
    }

    detail::record_traces(run, nodes, topology, spectrum, modes, 0.0);
    if (options.snapshot_stride > 0) detail::record_snapshot(run, nodes, 0.0);

    std::vector<int> triggered;
    std::vector<double> trig_norms, trig_thresholds;
    for (long long k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * options.dt;
        flow_step(nodes, design, topology, t - options.dt, options.dt);

        triggered.clear();
        trig_norms.clear();
        trig_thresholds.clear();
        for (int i = 0; i < n_nodes; ++i) {
            const Vec z = zhat_vector(nodes[i], degrees[i]);
            if (check_trigger(nodes[i], rule, t, z)) {
                triggered.push_back(i);
                Vec e(dim);
                for (std::size_t d = 0; d < dim; ++d)
                    e[d] = nodes[i].x_hat[d] - nodes[i].x[d];
                trig_norms.push_back(norm2(e));
                trig_thresholds.push_back(rule_threshold(nodes[i], rule, t, z));
            }
        }
        if (!triggered.empty()) {
            std::vector<Vec> payloads = apply_events(nodes, triggered, topology, t);
            for (std::size_t idx = 0; idx < triggered.size(); ++idx) {
                EventRecord rec;
                rec.time = t;
                rec.node = triggered[idx];
                rec.payload = std::move(payloads[idx]);
                rec.trigger_norm = trig_norms[idx];
                rec.threshold = trig_thresholds[idx];
                run.events.push_back(std::move(rec));
            }
        }

        detail::record_traces(run, nodes, topology, spectrum, modes, t);
        if (options.snapshot_stride > 0 && k % options.snapshot_stride == 0)
            detail::record_snapshot(run, nodes, t);
    }
    return run;
}

// Reference formulation: every node conceptually tracks an estimator of
// each neighbour's state. Globally that collapses to one bank of own-state
// estimators, with the plant driven by the Laplacian combination of all
// estimates. Serves as an independent oracle for `simulate`: the two runs
// must produce the same events and trajectories up to rounding noise.
inline SimulationRun simulate_reference(const ControlDesign& design, const Topology& topology,
                                        const LaplacianSpectrum& spectrum, const ModeSet& modes,
                                        const TriggerRule& rule, const Matrix& initial_states,
                                        const SimulationOptions& options) {
    detail::validate_run_inputs(design, topology, rule, initial_states, options);

    const int n_nodes = topology.n_nodes;
    const std::size_t dim = design.state_dim();
    const long long steps = std::llround(options.t_end / options.dt);
    if (steps < 1) throw config_error("simulate: horizon shorter than one grid step");

    SimulationRun run;
    run.n_nodes = n_nodes;
    run.state_dim = static_cast<int>(dim);
    run.dt = options.dt;
    run.t_end = options.t_end;
    run.rule = rule;
    run.snapshot_stride = options.snapshot_stride;
    run.initial_states = initial_states;

    std::vector<int> degrees(n_nodes);
    for (int i = 0; i < n_nodes; ++i) degrees[i] = topology.degree(i);

    // Stacked state: x for all nodes, then x_hat for all nodes.
    Vec state(2 * static_cast<std::size_t>(n_nodes) * dim);
    auto x_at = [&](Vec& s, int i) { return s.data() + static_cast<std::size_t>(i) * dim; };
    auto xh_at = [&](Vec& s, int i) {
        return s.data() + (static_cast<std::size_t>(n_nodes) + i) * dim;
    };
    for (int i = 0; i < n_nodes; ++i)
        for (std::size_t d = 0; d < dim; ++d) {
            x_at(state, i)[d] = initial_states(i, static_cast<std::size_t>(d));
            xh_at(state, i)[d] = initial_states(i, static_cast<std::size_t>(d));
        }

    std::vector<double> last_event(n_nodes, 0.0);
    std::vector<int> event_count(n_nodes, 1);

    // Neighbour-sum of estimates, ascending neighbour order (the same
    // summation order the two-estimator formulation uses).
    auto nbr_sum = [&](const Vec& s, int i) {
        Vec sum(dim, 0.0);
        for (int j = 0; j < n_nodes; ++j) {
            if (!topology.has_edge(i, j)) continue;
            const double* xh = s.data() + (static_cast<std::size_t>(n_nodes) + j) * dim;
            for (std::size_t d = 0; d < dim; ++d) sum[d] += xh[d];
        }
        return sum;
    };

    auto deriv = [&](double, const Vec& s) {
        Vec ds(s.size());
        const Matrix& h = design.h;
        for (int i = 0; i < n_nodes; ++i) {
            const double* x = s.data() + static_cast<std::size_t>(i) * dim;
            const double* xh = s.data() + (static_cast<std::size_t>(n_nodes) + i) * dim;
            const Vec sum = nbr_sum(s, i);
            double u = 0.0;
            for (std::size_t d = 0; d < dim; ++d)
                u += design.k[d] * (sum[d] - static_cast<double>(degrees[i]) * xh[d]);
            double* dx = ds.data() + static_cast<std::size_t>(i) * dim;
            double* dxh = ds.data() + (static_cast<std::size_t>(n_nodes) + i) * dim;
            for (std::size_t r = 0; r < dim; ++r) {
                double hx = 0.0, hxh = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    hx += h(r, c) * x[c];
                    hxh += h(r, c) * xh[c];
                }
                dx[r] = hx + design.b[r] * u;
                dxh[r] = hxh;
            }
        }
        return ds;
    };

    // Build a NodeRuntime view so traces, triggers, and snapshots share the
    // exact same code paths as the primary formulation.
    std::vector<NodeRuntime> view(n_nodes);
    auto refresh_view = [&]() {
        for (int i = 0; i < n_nodes; ++i) {
            NodeRuntime& node = view[static_cast<std::size_t>(i)];
            node.x.assign(x_at(state, i), x_at(state, i) + dim);
            node.x_hat.assign(xh_at(state, i), xh_at(state, i) + dim);
            node.x_hat_nbr = nbr_sum(state, i);
            node.last_event_time = last_event[i];
            node.event_count = event_count[i];
        }
    };
    refresh_view();

    for (int i = 0; i < n_nodes; ++i) {
        EventRecord rec;
        rec.time = 0.0;
        rec.node = i;
        rec.payload.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) rec.payload[d] = -initial_states(i, d);
        rec.trigger_norm = norm2(rec.payload);
        rec.threshold = rule_threshold(view[i], rule, 0.0, zhat_vector(view[i], degrees[i]));
        run.events.push_back(std::move(rec));
    }

    detail::record_traces(run, view, topology, spectrum, modes, 0.0);
    if (options.snapshot_stride > 0) detail::record_snapshot(run, view, 0.0);

    for (long long k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * options.dt;
        state = rk4_step(deriv, t - options.dt, state, options.dt);
        refresh_view();

        for (int i = 0; i < n_nodes; ++i) {
            const Vec z = zhat_vector(view[i], degrees[i]);
            if (!check_trigger(view[i], rule, t, z)) continue;
            EventRecord rec;
            rec.time = t;
            rec.node = i;
            rec.payload.resize(dim);
            for (std::size_t d = 0; d < dim; ++d)
                rec.payload[d] = xh_at(state, i)[d] - x_at(state, i)[d];
            rec.trigger_norm = norm2(rec.payload);
            rec.threshold = rule_threshold(view[i], rule, t, z);
            run.events.push_back(std::move(rec));

            for (std::size_t d = 0; d < dim; ++d) xh_at(state, i)[d] = x_at(state, i)[d];
            last_event[i] = t;
            event_count[i] += 1;
        }
        // Jumps may have changed estimator states; refresh before recording.
        refresh_view();

        detail::record_traces(run, view, topology, spectrum, modes, t);
        if (options.snapshot_stride > 0 && k % options.snapshot_stride == 0)
            detail::record_snapshot(run, view, t);
    }
    return run;
}

} // namespace etsync
