#pragma once

// ============================================================================
// Complex-envelope primitives.
//
// A rotating apparatus or a modulated electrical quantity is described by a
// complex angle  v = ln A + j*theta  whose exponential e^v = A e^{j theta}
// is the physical phasor.  Its time derivative is the complex frequency
// w = dv/dt = (dA/dt)/A + j*omega, pairing amplitude rate (nepers/s) with
// angular frequency (rad/s).  Products of envelope exponentials demodulate
// carrier-synchronous signals: e^{v_n} e^{v_m*} cancels any angle component
// common to both nodes.
// ============================================================================

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "syncscope/types.hpp"

namespace syncscope {

/// Logarithmic representation of a phasor: v = ln A + j*theta.
/// Amplitude is stored in nepers (ln A), so zero amplitude is unrepresentable
/// by design; the angle is kept unwrapped and unbounded.
struct ComplexAngle {
    Real ln_amplitude = 0.0; ///< ln A, nepers
    Real angle = 0.0;        ///< theta, radians
};

/// Time derivative of a complex angle: w = (dA/dt)/A + j*omega.
struct ComplexFrequency {
    Real amp_rate = 0.0;     ///< (dA/dt)/A, nepers/s
    Real angular_freq = 0.0; ///< omega, rad/s
};

/// Demodulated pairwise power, stored as one complex number P + jQ.
using ComplexPower = Complex;

/// v as the plain complex number ln A + j*theta.
inline Complex as_complex(const ComplexAngle& v) {
    return {v.ln_amplitude, v.angle};
}

/// w as the plain complex number (dA/dt)/A + j*omega.
inline Complex as_complex(const ComplexFrequency& w) {
    return {w.amp_rate, w.angular_freq};
}

/// Physical phasor e^v = A e^{j theta}.  The modulus is exp(ln_amplitude)
/// by construction, independent of the angle magnitude.
/// Throws std::domain_error on non-finite input.
inline Complex to_phasor(const ComplexAngle& v) {
    if (!std::isfinite(v.ln_amplitude) || !std::isfinite(v.angle)) {
        throw std::domain_error("to_phasor: non-finite complex angle");
    }
    return std::polar(std::exp(v.ln_amplitude), v.angle);
}

/// Pairwise demodulated power received at node m from node n:
///   S_mn = e^{v_n} e^{v_m*} = A_n A_m e^{j(theta_n - theta_m)}.
/// Computed in log-polar form so amplitudes multiply exactly and any common
/// angle offset cancels in the difference.
inline ComplexPower complex_power(const ComplexAngle& transmitter,
                                  const ComplexAngle& receiver) {
    if (!std::isfinite(transmitter.ln_amplitude) || !std::isfinite(transmitter.angle) ||
        !std::isfinite(receiver.ln_amplitude) || !std::isfinite(receiver.angle)) {
        throw std::domain_error("complex_power: non-finite complex angle");
    }
    const Real magnitude = std::exp(transmitter.ln_amplitude + receiver.ln_amplitude);
    return std::polar(magnitude, transmitter.angle - receiver.angle);
}

/// Nearest equivalent angle difference, in [-pi, pi].
inline Real wrap_angle_difference(Real d) {
    return std::remainder(d, 2.0 * pi);
}

/// Differentiate a uniformly sampled complex-angle trajectory.
/// Central differences in the interior, one-sided at both ends; consecutive
/// angle differences are reduced to their nearest equivalent before use, so
/// trajectories recorded with wrapped angles are handled correctly.
/// Requires at least two samples and dt > 0.
inline std::vector<ComplexFrequency> finite_diff_frequency(
    std::span<const ComplexAngle> samples, Real dt) {
    if (samples.size() < 2) {
        throw std::invalid_argument("finite_diff_frequency: need at least 2 samples");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("finite_diff_frequency: dt must be positive and finite");
    }
    for (const auto& s : samples) {
        if (!std::isfinite(s.ln_amplitude) || !std::isfinite(s.angle)) {
            throw std::domain_error("finite_diff_frequency: non-finite sample");
        }
    }

    const std::size_t n = samples.size();
    std::vector<ComplexFrequency> out(n);
    auto dtheta = [&](std::size_t hi, std::size_t lo) {
        return wrap_angle_difference(samples[hi].angle - samples[lo].angle);
    };

    out.front() = {(samples[1].ln_amplitude - samples[0].ln_amplitude) / dt,
                   dtheta(1, 0) / dt};
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out[i] = {(samples[i + 1].ln_amplitude - samples[i - 1].ln_amplitude) / (2.0 * dt),
                  (dtheta(i + 1, i) + dtheta(i, i - 1)) / (2.0 * dt)};
    }
    out.back() = {(samples[n - 1].ln_amplitude - samples[n - 2].ln_amplitude) / dt,
                  dtheta(n - 1, n - 2) / dt};
    return out;
}

} // namespace syncscope
