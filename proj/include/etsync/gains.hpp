#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "etsync/errors.hpp"
#include "etsync/graph.hpp"
#include "etsync/matrix.hpp"
#include "etsync/numerics.hpp"

namespace etsync {

// Node dynamics x' = H x + B u with the scalar feedback u = K z. Identical
// across nodes; only the coupling strength differs per Laplacian mode.
struct ControlDesign {
    Matrix h; // n x n drift
    Vec b;    // n input column
    Vec k;    // n feedback row

    std::size_t state_dim() const { return h.rows(); }

    Matrix bk() const { return outer(b, k); }

    void validate() const {
        const std::size_t n = h.rows();
        if (n == 0 || n != h.cols())
            throw config_error("design: drift matrix must be square and non-empty");
        if (b.size() != n)
            throw config_error("design: input column length must match state dimension");
        if (k.size() != n)
            throw config_error("design: feedback row length must match state dimension");
        for (double v : h.data())
            if (!std::isfinite(v)) throw config_error("design: drift matrix has non-finite entries");
        for (double v : b)
            if (!std::isfinite(v)) throw config_error("design: input column has non-finite entries");
        for (double v : k)
            if (!std::isfinite(v)) throw config_error("design: feedback row has non-finite entries");
    }
};

// One disagreement mode: closed-loop matrix H_i = H - lambda_i B K and its
// Lyapunov certificate P_i solving H_i^T P_i + P_i H_i = -2I.
struct Mode {
    double lambda = 0.0;
    Matrix h_closed;
    Matrix p;
};

struct ModeSet {
    std::vector<Mode> modes; // one per non-consensus eigenvalue, ascending
};

// Solve the per-mode Lyapunov certificates. Eigenvalues that agree to
// 1e-9 share one solve; an unstabilised mode surfaces as a design error
// naming the offending eigenvalue.
inline ModeSet build_modes(const ControlDesign& design, const LaplacianSpectrum& spectrum) {
    design.validate();
    const Matrix bk = design.bk();

    ModeSet out;
    out.modes.reserve(spectrum.eigenvalues.size() - 1);
    for (std::size_t i = 1; i < spectrum.eigenvalues.size(); ++i) {
        const double lambda = spectrum.eigenvalues[i];
        if (!out.modes.empty() && std::abs(out.modes.back().lambda - lambda) <= 1e-9) {
            Mode repeat = out.modes.back();
            repeat.lambda = lambda;
            out.modes.push_back(std::move(repeat));
            continue;
        }
        Mode mode;
        mode.lambda = lambda;
        mode.h_closed = design.h - lambda * bk;
        try {
            mode.p = solve_lyapunov(mode.h_closed);
        } catch (const config_error&) {
            throw;
        } catch (const error&) {
            // Indefinite certificate and singular certificate equation both
            // mean the same thing here: this mode is not rendered stable.
            std::ostringstream msg;
            msg << "mode with eigenvalue " << lambda
                << " is not stabilised by the given feedback";
            throw design_error(msg.str());
        }
        out.modes.push_back(std::move(mode));
    }
    return out;
}

// Coupling gain: the largest lambda_i ||P_i B K|| over the disagreement
// modes. Zero actuation gives zero, which the parameter derivation rejects.
inline double compute_alpha(const ModeSet& modes, const ControlDesign& design) {
    double alpha = 0.0;
    for (const Mode& m : modes.modes) {
        const Vec pb = m.p * design.b;
        alpha = std::max(alpha, m.lambda * norm2(pb) * norm2(design.k));
    }
    return alpha;
}

// Everything the triggering rules need, derived from the mode certificates.
struct GainParameters {
    double delta = 0.0;    // margin knob in (0, 1)
    double alpha = 0.0;    // coupling gain
    double rho = 0.0;      // relative trigger threshold
    double rho1 = 0.0;     // threshold headroom constant
    double a = 0.0;        // inter-event error growth rate
    double b = 0.0;        // inter-event error forcing
    double tau_star = 0.0; // guaranteed dwell time
    double det_c0 = 0.0;   // decaying-threshold floor
    double det_c1 = 0.0;   // decaying-threshold amplitude
    double det_gamma = 0.0; // decaying-threshold rate
};

inline GainParameters compute_gain_parameters(const ModeSet& modes,
                                              const ControlDesign& design,
                                              const LaplacianSpectrum& spectrum,
                                              double delta,
                                              double det_gamma = 0.30579) {
    if (!(delta > 0.0 && delta < 1.0))
        throw config_error("delta must lie strictly between 0 and 1");
    if (modes.modes.empty())
        throw design_error("no disagreement modes: network has a single node");

    const double n_nodes = static_cast<double>(spectrum.eigenvalues.size());
    const double lambda2 = spectrum.lambda2();
    const double lambda_max = spectrum.lambda_max();

    const double alpha = compute_alpha(modes, design);
    if (alpha <= 0.0)
        throw design_error("coupling gain is zero: design is degenerate (no actuation)");

    double h_closed_norm = 0.0;
    for (const Mode& m : modes.modes)
        h_closed_norm = std::max(h_closed_norm, spectral_norm(m.h_closed));
    const double h_norm = spectral_norm(design.h);
    const double bk_norm = rank_one_norm(design.b, design.k);

    GainParameters g;
    g.delta = delta;
    g.alpha = alpha;
    g.rho = delta / (lambda_max * std::sqrt(2.0 * n_nodes * (alpha * alpha + delta * delta)));
    g.rho1 = (1.0 / lambda2) * (delta / std::sqrt(2.0 * (alpha * alpha + delta * delta)) + 1.0);
    g.a = h_norm + h_closed_norm + lambda_max * (delta / alpha) * bk_norm;
    g.b = lambda_max * bk_norm * (1.0 + delta / alpha);
    g.tau_star = (1.0 / g.a) * std::log(g.a * g.rho / (g.b * g.rho1) + 1.0);
    g.det_c0 = 0.0;
    g.det_c1 = g.rho;
    g.det_gamma = det_gamma;

    if (!(g.tau_star > 0.0) || !std::isfinite(g.tau_star))
        throw numerical_error("derived dwell time is not a positive finite number");
    return g;
}

} // namespace etsync
