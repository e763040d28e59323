#pragma once

#include <stdexcept>
#include <string>

namespace etsync {

// Base class for everything this library throws on purpose. Each subclass
// maps to one CLI exit code, so keep the taxonomy small.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed config, dimension mismatch, out-of-range knob.
class config_error : public error {
public:
    explicit config_error(const std::string& what) : error(what) {}
};

// Structurally unusable network: disconnected graph, too few nodes, ...
class topology_error : public config_error {
public:
    explicit topology_error(const std::string& what) : config_error(what) {}
};

// The requested closed loop cannot be realised: some mode is not
// stabilised, or the design degenerates (no actuation at all).
class design_error : public error {
public:
    explicit design_error(const std::string& what) : error(what) {}
};

// A numerical routine failed: singular linear system, eigensolver did not
// converge, trajectory left the representable range.
class numerical_error : public error {
public:
    explicit numerical_error(const std::string& what) : error(what) {}
};

} // namespace etsync
