#include "syncscope/phase_locking.hpp"

#include <cmath>
#include <string>

namespace syncscope {

Real hybrid_power(ComplexPower S_hat, Real epsilon) {
    if (!std::isfinite(S_hat.real()) || !std::isfinite(S_hat.imag()) || !std::isfinite(epsilon)) {
        throw std::domain_error("hybrid_power: non-finite input");
    }
    // The cardinal reference angles select pure real-power or pure reactive
    // metering; their projections are evaluated exactly rather than through
    // cos/sin of the rounded angle (which would leak ~6e-17 of the other
    // component into the measurement).
    Real c = std::cos(epsilon);
    Real s = std::sin(epsilon);
    constexpr Real half_pi = 0.5 * pi;
    if (epsilon == 0.0) {
        c = 1.0;
        s = 0.0;
    } else if (epsilon == half_pi) {
        c = 0.0;
        s = 1.0;
    } else if (epsilon == pi) {
        c = -1.0;
        s = 0.0;
    } else if (epsilon == 3.0 * half_pi) {
        c = 0.0;
        s = -1.0;
    }
    return S_hat.real() * c + S_hat.imag() * s;
}

Real angle_sensitivity(const Equilibrium& eq, int m, Real epsilon) {
    const int n = static_cast<int>(eq.g0.rows());
    if (m < 0 || m >= n) {
        throw std::invalid_argument("angle_sensitivity: node index out of range");
    }
    // Aggregate remote signal: what node m would see if it stopped transmitting.
    Complex aggregate = 0.0;
    for (int t = 0; t < n; ++t) {
        if (t == m) continue;
        aggregate += eq.g0(m, t) * to_phasor(eq.angle0[static_cast<std::size_t>(t)]);
    }
    const Real a_bar = std::abs(aggregate);
    const Real a_m = std::exp(eq.angle0[static_cast<std::size_t>(m)].ln_amplitude);
    if (a_bar < 1e-300) {
        throw DegenerateLockError("angle_sensitivity: node " + std::to_string(m) +
                                  " receives no aggregate signal to lock onto");
    }
    const Real delta = eq.angle0[static_cast<std::size_t>(m)].angle - std::arg(aggregate);
    return a_bar * a_m * std::sin(epsilon - delta);
}

OscillatorState step_oscillator(const OscillatorState& state, Real W,
                                const PhaseLockConfig& cfg, Real omega0, Real dt) {
    if (!(cfg.inertia > 0.0) || !std::isfinite(cfg.inertia)) {
        throw ConfigError("step_oscillator: inertia must be positive");
    }
    if (!(cfg.damping >= 0.0) || !std::isfinite(cfg.damping)) {
        throw ConfigError("step_oscillator: damping must be non-negative");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw IntegrationError("step_oscillator: dt must be positive and finite");
    }
    if (!std::isfinite(W) || !std::isfinite(state.theta) || !std::isfinite(state.omega)) {
        throw IntegrationError("step_oscillator: non-finite state or input");
    }
    const Real drive = (W - cfg.setpoint) / cfg.inertia;
    auto f_omega = [&](Real omega) { return drive - cfg.damping * (omega - omega0); };

    const Real k1w = f_omega(state.omega);
    const Real k1t = state.omega;
    const Real k2w = f_omega(state.omega + 0.5 * dt * k1w);
    const Real k2t = state.omega + 0.5 * dt * k1w;
    const Real k3w = f_omega(state.omega + 0.5 * dt * k2w);
    const Real k3t = state.omega + 0.5 * dt * k2w;
    const Real k4w = f_omega(state.omega + dt * k3w);
    const Real k4t = state.omega + dt * k3w;

    return {state.theta + (dt / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
            state.omega + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)};
}

} // namespace syncscope
