#pragma once

// JSON configuration: schema types, strict parsing (unknown keys rejected,
// errors carry line/column or a field path), canonical serialization, and
// builders that turn a validated document into the runtime objects.
//
// Units: angles in radians, frequencies in rad/s, amplitudes linear
// (converted to nepers internally), all powers per-unit.  A document may
// carry an optional system.units section; any labeling other than
// {"angle": "rad", "amplitude": "linear"} is rejected.

#include <optional>
#include <string>
#include <vector>

#include "syncscope/branch_reduction.hpp"
#include "syncscope/channel.hpp"
#include "syncscope/network.hpp"
#include "syncscope/node.hpp"
#include "syncscope/phase_locking.hpp"
#include "syncscope/simulator.hpp"
#include "syncscope/stability.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// system { ... } section with global settings.
struct SystemSettings {
    Real omega0 = default_omega0;
    Real dt = 1e-4;
    Real dt_out = 1e-3;
    Real duration = 10.0;
    FrequencyGrid zeta_grid;
};

/// nodes[] entry.  epsilon falls back to the node-kind default when absent.
struct NodeConfig {
    std::string id;
    NodeKind kind = NodeKind::Voltage;
    Real inertia = 1.0;
    Real damping = 0.0;
    std::optional<Real> epsilon;
    Real amplitude = 1.0;
    Real angle = 0.0;
    std::optional<std::vector<FirstOrderFactor>> self_channel;
};

/// channels[] entry: an undirected factored channel between two nodes.
struct ChannelConfig {
    std::string from;
    std::string to;
    std::vector<FirstOrderFactor> factors;
};

/// branches[] entry: a series R-L element (either value may be zero, not both).
struct BranchConfig {
    std::string from;
    std::string to;
    Real resistance = 0.0;
    Real inductance = 0.0;
};

/// perturbations[] entry, applied at t = 0 of a simulation.
struct PerturbationConfig {
    std::string node;
    Real delta_theta = 0.0;
    Real delta_omega = 0.0;
};

/// A validated configuration document.  Exactly one of channels / branches
/// may be non-empty (a node set with neither describes isolated oscillators
/// or self-channels only).
struct SystemConfig {
    SystemSettings system;
    std::vector<NodeConfig> nodes;
    std::vector<ChannelConfig> channels;
    std::vector<BranchConfig> branches;
    /// Optional explicit declaration of the interior (passive) node ids of a
    /// branch network; when present it must match the implied set exactly.
    std::optional<std::vector<std::string>> passive_nodes;
    std::vector<PerturbationConfig> perturbations;
};

/// Parses and validates a JSON document.  Throws ConfigError with
/// line/column on syntax errors and with a field path on semantic errors
/// (unknown key, duplicate id, dangling reference, out-of-range value).
SystemConfig parse_config(const std::string& text);

/// Canonical JSON rendering with every field written explicitly (defaults
/// resolved).  parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const SystemConfig& config);

/// SHA-256 hex digest of the canonicalized document (whitespace- and
/// key-order-insensitive): the provenance hash recorded in reports/traces.
std::string config_digest(const std::string& text);

/// Instantiates the network described by the config.
NetworkGraph build_graph(const SystemConfig& config);

/// The scalar inertia dynamics used by the stability criterion: damping is
/// the minimum over the nodes.  When per-node values differ, a warning is
/// appended to `notes` (the certificate treats extra damping only
/// heuristically).
InertiaDynamics shared_inertia_dynamics(const SystemConfig& config,
                                        std::vector<std::string>* notes = nullptr);

/// Maps the config's perturbation list to node indices of the graph.
std::vector<Perturbation> resolve_perturbations(const SystemConfig& config,
                                                const NetworkGraph& graph);

} // namespace syncscope
