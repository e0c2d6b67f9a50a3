#pragma once

#include <optional>
#include <string>

#include "syncscope/channel.hpp"
#include "syncscope/envelope.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// What an apparatus imposes on the network: voltage nodes transmit a voltage
/// signal and receive current; current nodes transmit an injected current and
/// receive voltage.
enum class NodeKind { Voltage, Current };

/// Hybrid-power angle used when none is configured: voltage nodes lock on
/// real power (eps = 0), current nodes on reactive power (eps = pi/2).
inline Real default_epsilon(NodeKind kind) {
    return kind == NodeKind::Voltage ? 0.0 : 0.5 * pi;
}

/// One synchronizing apparatus.
struct Node {
    std::string id;
    NodeKind kind = NodeKind::Voltage;
    Real inertia = 1.0; ///< H, > 0
    Real damping = 0.0; ///< D, >= 0
    Real epsilon = 0.0; ///< hybrid-power angle, [0, 2*pi)
    ComplexAngle equilibrium; ///< configured operating-point complex angle
    std::optional<RationalChannel> self_channel;
};

} // namespace syncscope
