#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "etsync/errors.hpp"
#include "etsync/gains.hpp"
#include "etsync/graph.hpp"
#include "etsync/matrix.hpp"
#include "etsync/rng.hpp"
#include "etsync/simulator.hpp"

namespace etsync {

using json = nlohmann::json;

struct TopologySpec {
    std::string generator = "two_nearest_neighbour"; // or "edges"
    int n_nodes = 0;
    std::vector<std::pair<int, int>> edges; // used when generator == "edges"
};

struct RuleSpec {
    std::string kind = "ddt"; // ddt | det | naive
    std::optional<double> c0, c1, gamma; // det knobs; defaults come from the gain derivation
};

struct InitialStateSpec {
    bool explicit_values = false;
    Matrix values;              // N x n when explicit
    std::uint64_t seed = 1;
    double range_lo = -1.0;
    double range_hi = 1.0;
};

struct ScenarioConfig {
    TopologySpec topology;
    Matrix h;
    Vec b;
    Vec k;
    double delta = 0.9;
    RuleSpec rule;
    double dt = 1e-4;
    double t_end = 0.0;
    InitialStateSpec initial_states;
    int decimation = 1;    // snapshot stride for the trajectory table
    int compare_seeds = 10; // seed batch size for rule comparison
};

namespace detail {

inline const json& require_key(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw config_error("config: missing required field '" + where + key + "'");
    return *it;
}

inline double require_finite(const json& j, const std::string& where) {
    if (!j.is_number())
        throw config_error("config: field '" + where + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw config_error("config: field '" + where + "' must be finite");
    return v;
}

inline Matrix parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw config_error("config: field '" + where + "' must be a non-empty nested array");
    const std::size_t cols = j.front().size();
    Matrix m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw config_error("config: field '" + where + "' has ragged rows");
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = require_finite(j[r][c], where);
    }
    return m;
}

inline Vec parse_vector(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw config_error("config: field '" + where + "' must be a non-empty array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = require_finite(j[i], where);
    return v;
}

} // namespace detail

inline ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig cfg;

    const json& topo = detail::require_key(j, "topology", "");
    if (topo.contains("edges")) {
        cfg.topology.generator = "edges";
        cfg.topology.n_nodes =
            detail::require_key(topo, "n_nodes", "topology.").get<int>();
        for (const auto& e : topo.at("edges")) {
            if (!e.is_array() || e.size() != 2)
                throw config_error("config: field 'topology.edges' entries must be pairs");
            cfg.topology.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    } else {
        cfg.topology.generator =
            detail::require_key(topo, "generator", "topology.").get<std::string>();
        cfg.topology.n_nodes =
            detail::require_key(topo, "n_nodes", "topology.").get<int>();
        if (cfg.topology.generator != "two_nearest_neighbour")
            throw config_error("config: unknown topology generator '" +
                               cfg.topology.generator + "'");
    }
    if (cfg.topology.n_nodes <= 0)
        throw config_error("config: field 'topology.n_nodes' must be positive");

    const json& design = detail::require_key(j, "design", "");
    cfg.h = detail::parse_matrix(detail::require_key(design, "h", "design."), "design.h");
    cfg.b = detail::parse_vector(detail::require_key(design, "b", "design."), "design.b");
    cfg.k = detail::parse_vector(detail::require_key(design, "k", "design."), "design.k");
    if (cfg.h.rows() != cfg.h.cols())
        throw config_error("config: field 'design.h' must be square");
    if (cfg.b.size() != cfg.h.rows() || cfg.k.size() != cfg.h.rows())
        throw config_error("config: fields 'design.b' and 'design.k' must match the "
                           "state dimension of 'design.h'");

    if (j.contains("delta")) cfg.delta = detail::require_finite(j.at("delta"), "delta");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw config_error("config: field 'delta' must lie strictly between 0 and 1");

    if (j.contains("rule")) {
        const json& rule = j.at("rule");
        cfg.rule.kind = detail::require_key(rule, "kind", "rule.").get<std::string>();
        if (cfg.rule.kind != "ddt" && cfg.rule.kind != "det" && cfg.rule.kind != "naive")
            throw config_error("config: field 'rule.kind' must be ddt, det, or naive");
        if (rule.contains("c0")) cfg.rule.c0 = detail::require_finite(rule.at("c0"), "rule.c0");
        if (rule.contains("c1")) cfg.rule.c1 = detail::require_finite(rule.at("c1"), "rule.c1");
        if (rule.contains("gamma"))
            cfg.rule.gamma = detail::require_finite(rule.at("gamma"), "rule.gamma");
    }

    if (j.contains("dt")) cfg.dt = detail::require_finite(j.at("dt"), "dt");
    if (!(cfg.dt > 0.0)) throw config_error("config: field 'dt' must be positive");

    cfg.t_end = detail::require_finite(detail::require_key(j, "t_end", ""), "t_end");
    if (!(cfg.t_end > 0.0)) throw config_error("config: field 't_end' must be positive");

    const json& init = detail::require_key(j, "initial_states", "");
    if (init.contains("values")) {
        cfg.initial_states.explicit_values = true;
        cfg.initial_states.values =
            detail::parse_matrix(init.at("values"), "initial_states.values");
    } else {
        cfg.initial_states.seed =
            detail::require_key(init, "seed", "initial_states.").get<std::uint64_t>();
        const json& range = detail::require_key(init, "range", "initial_states.");
        if (!range.is_array() || range.size() != 2)
            throw config_error("config: field 'initial_states.range' must be [lo, hi]");
        cfg.initial_states.range_lo = detail::require_finite(range[0], "initial_states.range");
        cfg.initial_states.range_hi = detail::require_finite(range[1], "initial_states.range");
        if (!(cfg.initial_states.range_lo < cfg.initial_states.range_hi))
            throw config_error("config: field 'initial_states.range' must satisfy lo < hi");
    }

    if (j.contains("decimation")) {
        cfg.decimation = j.at("decimation").get<int>();
        if (cfg.decimation < 1)
            throw config_error("config: field 'decimation' must be at least 1");
    }
    if (j.contains("compare_seeds")) {
        cfg.compare_seeds = j.at("compare_seeds").get<int>();
        if (cfg.compare_seeds < 1)
            throw config_error("config: field 'compare_seeds' must be at least 1");
    }
    return cfg;
}

inline json to_json(const ScenarioConfig& cfg) {
    json j;
    if (cfg.topology.generator == "edges") {
        json edges = json::array();
        for (const auto& [u, v] : cfg.topology.edges) edges.push_back({u, v});
        j["topology"] = {{"n_nodes", cfg.topology.n_nodes}, {"edges", edges}};
    } else {
        j["topology"] = {{"generator", cfg.topology.generator},
                         {"n_nodes", cfg.topology.n_nodes}};
    }

    json h = json::array();
    for (std::size_t r = 0; r < cfg.h.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < cfg.h.cols(); ++c) row.push_back(cfg.h(r, c));
        h.push_back(row);
    }
    j["design"] = {{"h", h}, {"b", cfg.b}, {"k", cfg.k}};
    j["delta"] = cfg.delta;

    json rule = {{"kind", cfg.rule.kind}};
    if (cfg.rule.c0) rule["c0"] = *cfg.rule.c0;
    if (cfg.rule.c1) rule["c1"] = *cfg.rule.c1;
    if (cfg.rule.gamma) rule["gamma"] = *cfg.rule.gamma;
    j["rule"] = rule;

    j["dt"] = cfg.dt;
    j["t_end"] = cfg.t_end;

    if (cfg.initial_states.explicit_values) {
        json values = json::array();
        for (std::size_t r = 0; r < cfg.initial_states.values.rows(); ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < cfg.initial_states.values.cols(); ++c)
                row.push_back(cfg.initial_states.values(r, c));
            values.push_back(row);
        }
        j["initial_states"] = {{"values", values}};
    } else {
        j["initial_states"] = {{"seed", cfg.initial_states.seed},
                               {"range", {cfg.initial_states.range_lo,
                                          cfg.initial_states.range_hi}}};
    }

    j["decimation"] = cfg.decimation;
    j["compare_seeds"] = cfg.compare_seeds;
    return j;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config: parse error: ") + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
}

// --- Bridges from config specs to domain objects ---------------------------

inline Topology build_topology(const TopologySpec& spec) {
    if (spec.generator == "edges")
        return Topology::from_edges(spec.n_nodes, spec.edges);
    return Topology::two_nearest_neighbour(spec.n_nodes);
}

inline Matrix build_initial_states(const InitialStateSpec& spec, int n_nodes, int state_dim,
                                   std::optional<std::uint64_t> seed_override = {}) {
    if (spec.explicit_values) {
        if (static_cast<int>(spec.values.rows()) != n_nodes ||
            static_cast<int>(spec.values.cols()) != state_dim)
            throw config_error("config: field 'initial_states.values' must be n_nodes x "
                               "state_dim");
        return spec.values;
    }
    SplitMix64 rng(seed_override.value_or(spec.seed));
    Matrix states(n_nodes, state_dim);
    for (int i = 0; i < n_nodes; ++i)
        for (int d = 0; d < state_dim; ++d)
            states(i, d) = rng.next_uniform(spec.range_lo, spec.range_hi);
    return states;
}

inline TriggerRule build_trigger_rule(const RuleSpec& spec, const GainParameters& gains) {
    if (spec.kind == "ddt") return DwellTimeRule{gains.rho, gains.tau_star};
    if (spec.kind == "det")
        return DecayThresholdRule{spec.c0.value_or(gains.det_c0),
                                  spec.c1.value_or(gains.det_c1),
                                  spec.gamma.value_or(gains.det_gamma)};
    return NaiveRelativeRule{gains.rho};
}

} // namespace etsync
