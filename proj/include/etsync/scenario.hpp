#pragma once

#include <cstdint>
#include <optional>

#include "etsync/config.hpp"
#include "etsync/gains.hpp"
#include "etsync/graph.hpp"
#include "etsync/simulator.hpp"

namespace etsync {

// Everything derivable from a config before any trajectory exists:
// topology, spectrum, mode certificates, and trigger parameters.
struct ScenarioArtifacts {
    Topology topology;
    Matrix laplacian;
    LaplacianSpectrum spectrum;
    ControlDesign design;
    ModeSet modes;
    GainParameters gains;
};

inline ScenarioArtifacts prepare_scenario(const ScenarioConfig& cfg) {
    ScenarioArtifacts art;
    art.topology = build_topology(cfg.topology);
    art.laplacian = build_laplacian(art.topology);
    art.spectrum = spectral_decompose(art.laplacian);
    art.design = ControlDesign{cfg.h, cfg.b, cfg.k};
    art.design.validate();
    art.modes = build_modes(art.design, art.spectrum);
    art.gains = compute_gain_parameters(art.modes, art.design, art.spectrum, cfg.delta,
                                        cfg.rule.gamma.value_or(0.30579));
    return art;
}

// One full event-triggered run of the configured scenario. The rule spec
// may be overridden (for rule comparisons) and the IC seed may be
// overridden (for seed batches); everything else comes from the config.
inline SimulationRun run_scenario(const ScenarioConfig& cfg, const ScenarioArtifacts& art,
                                  std::optional<std::uint64_t> seed_override = {},
                                  std::optional<RuleSpec> rule_override = {},
                                  bool reference_formulation = false) {
    const TriggerRule rule = build_trigger_rule(rule_override.value_or(cfg.rule), art.gains);
    const Matrix initial = build_initial_states(cfg.initial_states, art.topology.n_nodes,
                                                static_cast<int>(art.design.state_dim()),
                                                seed_override);
    SimulationOptions options;
    options.dt = cfg.dt;
    options.t_end = cfg.t_end;
    options.snapshot_stride = cfg.decimation;
    if (reference_formulation)
        return simulate_reference(art.design, art.topology, art.spectrum, art.modes, rule,
                                  initial, options);
    return simulate(art.design, art.topology, art.spectrum, art.modes, rule, initial, options);
}

} // namespace etsync
