#pragma once

// ============================================================================
// Generalized phase locking.
//
// Every apparatus runs the same loop: demodulate received power, project it
// onto the hybrid-power direction eps, compare against the setpoint, and let
// the surplus drive a local oscillator through the inertia dynamics
// T(s) = 1/(s + D).  eps = 0 recovers real-power locking (rotating machine),
// eps = pi/2 reactive-power locking (phase-locked converter); intermediate
// angles blend the two.
//
// Sign convention: surplus received power accelerates the local oscillator,
//     H dw/dt = (W - W*) - H D (w - w0),
// which reproduces the classic stable swing pair for two voltage nodes under
// this library's receive conventions, and the standard PLL for current nodes.
// ============================================================================

#include <span>

#include "syncscope/network.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// Per-apparatus locking parameters.
struct PhaseLockConfig {
    Real epsilon = 0.0;  ///< hybrid-power angle, [0, 2*pi)
    Real inertia = 1.0;  ///< H, > 0
    Real damping = 0.0;  ///< D, >= 0
    Real setpoint = 0.0; ///< W*
};

/// Shared loop dynamics T(s) = 1/(s + D).
struct InertiaDynamics {
    Real damping = 0.0;

    [[nodiscard]] Complex transfer(Complex s) const { return 1.0 / (s + damping); }
    [[nodiscard]] Complex inverse_transfer(Complex s) const { return s + damping; }
};

/// W = Re(e^{-j eps} S): the component of received complex power the
/// apparatus locks on.  W(0) = P, W(pi/2) = Q.
[[nodiscard]] Real hybrid_power(ComplexPower S_hat, Real epsilon);

/// Sensitivity of the locked hybrid power to the expected angle difference
/// delta_m = theta_m - aggregate angle:  A-bar * A * (sin(eps - delta)).
/// Throws DegenerateLockError when node m receives no aggregate signal.
[[nodiscard]] Real angle_sensitivity(const Equilibrium& eq, int m, Real epsilon);

/// Local oscillator state: absolute angle and angular frequency.
struct OscillatorState {
    Real theta = 0.0;
    Real omega = 0.0;
};

/// One RK4 step of the oscillator with the received hybrid power W held
/// constant over the step:  dtheta/dt = w,  H dw/dt = (W - W*) - H D (w - w0).
[[nodiscard]] OscillatorState step_oscillator(const OscillatorState& state, Real W,
                                              const PhaseLockConfig& cfg, Real omega0, Real dt);

} // namespace syncscope
