// Acceptance gate for the event-triggered synchronization toolkit.
//
// Each criterion prints exactly one [PASS]/[FAIL] line with the measured
// numbers; the process exit code is the number of failed criteria. All
// tolerances are pinned here, not configurable, so a green run means the
// same thing on every machine.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <etsync/etsync.hpp>

#include "support.hpp"

using etsync::Matrix;
using etsync::Vec;

namespace {

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return buf;
}

struct Outcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Artifacts {
    etsync::Topology topology;
    etsync::LaplacianSpectrum spectrum;
    etsync::ControlDesign design;
    etsync::ModeSet modes;
    etsync::GainParameters gains;
};

Artifacts build_artifacts() {
    Artifacts art;
    art.topology = etsync::Topology::two_nearest_neighbour(10);
    art.spectrum = etsync::spectral_decompose(etsync::build_laplacian(art.topology));
    art.design = testsupport::demo_design();
    art.modes = etsync::build_modes(art.design, art.spectrum);
    art.gains = etsync::compute_gain_parameters(art.modes, art.design, art.spectrum, 0.9);
    return art;
}

Matrix seeded_states(std::uint64_t seed, int n_nodes, int dim) {
    etsync::SplitMix64 rng(seed);
    Matrix states(n_nodes, dim);
    for (int i = 0; i < n_nodes; ++i)
        for (int d = 0; d < dim; ++d) states(i, d) = rng.next_uniform(-1.0, 1.0);
    return states;
}

// Everything the batch criteria need from one finished run, so the run
// itself (tens of megabytes of traces) can be freed immediately.
struct RunDigest {
    double initial_sync = 0.0;
    double final_sync = 0.0;
    double worst_dv = 0.0;    // largest certificate increase while out of sync
    double worst_upper = -std::numeric_limits<double>::infinity();
    double worst_lower = -std::numeric_limits<double>::infinity();
    double min_gap = std::numeric_limits<double>::infinity();
    double max_gap_ratio = 0.0; // max over nodes of tau_max / tau_min
    bool all_tau_min_above = true;
    bool any_gaps = false;
    int total_events = 0;
};

RunDigest digest(const etsync::SimulationRun& run, const etsync::LaplacianSpectrum& spectrum,
                 double tau_star) {
    RunDigest d;
    const etsync::TraceSeries& tr = run.traces;
    d.initial_sync = tr.sync_norm.front();
    d.final_sync = tr.sync_norm.back();

    for (std::size_t k = 0; k + 1 < tr.lyapunov_v.size(); ++k) {
        if (tr.sync_norm[k] <= 1e-6) continue;
        d.worst_dv = std::max(d.worst_dv, tr.lyapunov_v[k + 1] - tr.lyapunov_v[k]);
    }

    const double lam_max = spectrum.lambda_max();
    const double lam2 = spectrum.lambda2();
    for (std::size_t k = 0; k < tr.time.size(); ++k) {
        const double y = tr.sync_norm[k], e = tr.error_norm[k], z = tr.zhat_norm[k];
        d.worst_upper = std::max(d.worst_upper, z - lam_max * (e + y));
        d.worst_lower = std::max(d.worst_lower, lam2 * y - (lam_max * e + z));
    }

    const etsync::EventStats stats = etsync::inter_event_stats(run);
    d.total_events = stats.total_events;
    for (const etsync::NodeEventStats& st : stats.per_node) {
        if (!st.has_gaps) continue;
        d.any_gaps = true;
        d.min_gap = std::min(d.min_gap, st.tau_min);
        d.max_gap_ratio = std::max(d.max_gap_ratio, st.tau_max / st.tau_min);
        if (!(st.tau_min > tau_star)) d.all_tau_min_above = false;
    }
    return d;
}

// --- Criteria ---------------------------------------------------------------

Outcome check_alpha_reference(const Artifacts& art) {
    // The demo design ships with a reference coupling gain of 2.9061 for
    // this exact network. The certificate chain implemented here does not
    // reproduce it: for the normalised certificates H_i^T P_i + P_i H_i =
    // -2I the product lambda_i ||P_i B K|| is bounded by 2.5 over ALL
    // spectra of this design, so 2.9061 is not attainable from the stated
    // construction. The criterion is kept as specified and reports the
    // discrepancy instead of papering over it; every downstream parameter
    // uses the self-consistent computed value.
    const double reference = 2.9061;
    const double computed = art.gains.alpha;
    const double deviation = std::abs(computed - reference) / reference;
    Outcome out{"gain_alpha_reference", deviation <= 0.01, ""};
    out.detail = strf("computed alpha %.17g vs reference %.4f, deviation %.3f%% (tolerance 1%%)",
                      computed, reference, deviation * 100.0);
    return out;
}

Outcome check_ring_spectrum() {
    double worst = 0.0;
    for (std::size_t n = 5; n <= 20; ++n) {
        const auto spec = etsync::spectral_decompose(
            etsync::build_laplacian(etsync::Topology::two_nearest_neighbour(n)));
        const auto oracle = testsupport::ring_eigenvalues(n);
        for (std::size_t k = 0; k < n; ++k)
            worst = std::max(worst, std::abs(spec.eigenvalues[k] - oracle[k]));
    }

    const auto demo = etsync::spectral_decompose(
        etsync::build_laplacian(etsync::Topology::two_nearest_neighbour(10)));
    const double dev2 = std::abs(demo.lambda2() - 1.763932);
    const double dev_max = std::abs(demo.lambda_max() - 6.236068);

    Outcome out{"ring_spectrum_closed_form",
                worst <= 1e-9 && dev2 <= 1e-6 && dev_max <= 1e-6, ""};
    out.detail = strf("max closed-form deviation %.3g over rings N=5..20 (tol 1e-9); "
                      "demo extremes %.9f / %.9f vs 1.763932 / 6.236068 (tol 1e-6)",
                      worst, demo.lambda2(), demo.lambda_max());
    return out;
}

Outcome check_lyapunov_certificates(const Artifacts& art) {
    double worst_residual = 0.0;
    int solved = 0;

    auto residual_of = [](const Matrix& h, const Matrix& p) {
        return etsync::frobenius_norm(h.transposed() * p + p * h +
                                      2.0 * Matrix::identity(h.rows()));
    };

    for (const etsync::Mode& mode : art.modes.modes) {
        worst_residual = std::max(worst_residual, residual_of(mode.h_closed, mode.p));
        ++solved;
    }

    etsync::SplitMix64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_u64() % 5;
        const Matrix h = testsupport::random_hurwitz(rng, n, 0.3 + rng.next_double());
        const Matrix p = etsync::solve_lyapunov(h); // throws unless P is positive definite
        worst_residual = std::max(worst_residual, residual_of(h, p));
        ++solved;
    }

    Outcome out{"lyapunov_certificates", worst_residual < 1e-10, ""};
    out.detail = strf("%d systems solved positive definite, worst residual %.3g (tol 1e-10)",
                      solved, worst_residual);
    return out;
}

Outcome check_dwell_time_derivation(const Artifacts& art) {
    const etsync::GainParameters& g = art.gains;
    const double reference = 0.0013;
    const double ratio = g.tau_star / reference;

    // The defining identity, re-evaluated in extended precision from the
    // stored double parameters: exp(a tau*) == a rho / (b rho1) + 1.
    const long double lhs = std::exp(static_cast<long double>(g.a) * g.tau_star);
    const long double rhs =
        static_cast<long double>(g.a) * g.rho / (static_cast<long double>(g.b) * g.rho1) + 1.0L;
    const double identity_err = static_cast<double>(std::abs(lhs - rhs) / rhs);

    Outcome out{"dwell_time_derivation",
                g.tau_star > 0.0 && identity_err <= 1e-12 && ratio >= 0.5 && ratio <= 2.0, ""};
    out.detail = strf("tau* = %.17g, identity error %.3g (tol 1e-12), "
                      "%.4fx the 0.0013 reference (allowed 0.5x..2x)",
                      g.tau_star, identity_err, ratio);
    return out;
}

Outcome check_formulation_equivalence(const Artifacts& art) {
    etsync::SimulationOptions options;
    options.dt = 1e-4;
    options.t_end = 2.0;
    options.snapshot_stride = 1;

    const Matrix states = seeded_states(1, 10, 2);
    const etsync::DwellTimeRule rule{art.gains.rho, art.gains.tau_star};
    const auto a = etsync::simulate(art.design, art.topology, art.spectrum, art.modes, rule,
                                    states, options);
    const auto b = etsync::simulate_reference(art.design, art.topology, art.spectrum,
                                              art.modes, rule, states, options);
    const auto rep = etsync::check_equivalence(a, b);

    const bool nontrivial = a.events.size() > 10; // beyond the initial broadcasts
    Outcome out{"formulation_equivalence", rep.within(1e-9) && nontrivial, ""};
    out.detail = strf("%zu events%s, max state deviation %.3g, max payload deviation %.3g "
                      "(tol 1e-9)%s",
                      a.events.size(), rep.event_logs_match ? " identical" : " DIFFER",
                      rep.max_state_deviation, rep.max_payload_deviation,
                      rep.event_logs_match ? "" : (" - " + rep.mismatch_detail).c_str());
    return out;
}

Outcome check_synchronization(const std::vector<RunDigest>& ddt) {
    double worst_reduction = 0.0;
    double worst_dv = 0.0;
    for (const RunDigest& d : ddt) {
        worst_reduction = std::max(worst_reduction, d.final_sync / d.initial_sync);
        worst_dv = std::max(worst_dv, d.worst_dv);
    }
    Outcome out{"synchronization_convergence",
                worst_reduction <= 1e-2 && worst_dv <= 1e-7, ""};
    out.detail = strf("10 seeds: worst final/initial disagreement %.3g (tol 1e-2), "
                      "worst certificate increase %.3g (tol 1e-7)",
                      worst_reduction, worst_dv);
    return out;
}

Outcome check_dwell_respected(const std::vector<RunDigest>& ddt, double tau_star) {
    double min_gap = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const RunDigest& d : ddt) {
        if (!d.any_gaps) continue;
        any = true;
        min_gap = std::min(min_gap, d.min_gap);
    }
    // Exact comparison on purpose: the trigger gate evaluates the very
    // same subtraction, so even one ulp below the dwell time is a bug.
    Outcome out{"dwell_time_respected", any && min_gap >= tau_star, ""};
    out.detail = strf("smallest inter-event gap %.17g vs dwell time %.17g (exact >=)",
                      min_gap, tau_star);
    return out;
}

Outcome check_triangle_bounds(const std::vector<RunDigest>& ddt,
                              const std::vector<RunDigest>& det) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto* batch : {&ddt, &det})
        for (const RunDigest& d : *batch)
            worst = std::max({worst, d.worst_upper, d.worst_lower});
    Outcome out{"norm_triangle_bounds", worst <= 1e-9, ""};
    out.detail = strf("worst margin %.3g across 20 runs at every grid point (tol 1e-9)",
                      worst);
    return out;
}

Outcome check_rule_comparison(const std::vector<RunDigest>& ddt,
                              const std::vector<RunDigest>& det) {
    int not_worse = 0;
    double worst_det_reduction = 0.0;
    for (std::size_t s = 0; s < ddt.size(); ++s) {
        if (ddt[s].total_events <= det[s].total_events) ++not_worse;
        worst_det_reduction =
            std::max(worst_det_reduction, det[s].final_sync / det[s].initial_sync);
    }
    Outcome out{"rule_efficiency_comparison",
                not_worse >= 8 && worst_det_reduction <= 1e-2, ""};
    out.detail = strf("dwell rule fired no more often on %d/10 seeds (need 8); "
                      "decay rule worst final/initial %.3g (tol 1e-2)",
                      not_worse, worst_det_reduction);
    return out;
}

Outcome check_event_cadence(const std::vector<RunDigest>& ddt, double tau_star) {
    bool all_above = true;
    bool any = false;
    double best_ratio = 0.0;
    for (const RunDigest& d : ddt) {
        if (!d.any_gaps) continue;
        any = true;
        all_above = all_above && d.all_tau_min_above;
        best_ratio = std::max(best_ratio, d.max_gap_ratio);
    }
    // Cadence should stretch as the network settles: early bursts, late
    // quiet. A 10x spread between a node's shortest and longest gap is the
    // signature; uniform cadence would point at a periodic controller in
    // event-triggered clothing.
    Outcome out{"event_cadence_profile", any && all_above && best_ratio >= 10.0, ""};
    out.detail = strf("every per-node minimum gap above tau* = %.6g: %s; "
                      "largest max/min gap spread %.1fx (need 10x)",
                      tau_star, all_above ? "yes" : "NO", best_ratio);
    return out;
}

} // namespace

int main() {
    std::vector<Outcome> results;
    try {
        const Artifacts art = build_artifacts();

        results.push_back(check_alpha_reference(art));
        results.push_back(check_ring_spectrum());
        results.push_back(check_lyapunov_certificates(art));
        results.push_back(check_dwell_time_derivation(art));
        results.push_back(check_formulation_equivalence(art));

        // One long-horizon batch per rule, folded to digests seed by seed.
        std::vector<RunDigest> ddt_digests, det_digests;
        etsync::SimulationOptions options;
        options.dt = 1e-4;
        options.t_end = 18.0;
        options.snapshot_stride = 0;
        const etsync::DwellTimeRule ddt_rule{art.gains.rho, art.gains.tau_star};
        const etsync::DecayThresholdRule det_rule{art.gains.det_c0, art.gains.det_c1,
                                                  art.gains.det_gamma};
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const Matrix states = seeded_states(seed, 10, 2);
            ddt_digests.push_back(
                digest(etsync::simulate(art.design, art.topology, art.spectrum, art.modes,
                                        ddt_rule, states, options),
                       art.spectrum, art.gains.tau_star));
            det_digests.push_back(
                digest(etsync::simulate(art.design, art.topology, art.spectrum, art.modes,
                                        det_rule, states, options),
                       art.spectrum, 0.0));
        }

        results.push_back(check_synchronization(ddt_digests));
        results.push_back(check_dwell_respected(ddt_digests, art.gains.tau_star));
        results.push_back(check_triangle_bounds(ddt_digests, det_digests));
        results.push_back(check_rule_comparison(ddt_digests, det_digests));
        results.push_back(check_event_cadence(ddt_digests, art.gains.tau_star));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance harness aborted: %s\n", e.what());
        return 99;
    }

    int failures = 0;
    for (const Outcome& r : results) {
        std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        if (!r.passed) ++failures;
    }
    std::printf("acceptance: %zu of %zu criteria passed\n", results.size() - failures,
                results.size());
    return failures;
}
