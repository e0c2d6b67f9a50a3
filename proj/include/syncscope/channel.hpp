#pragma once

// ============================================================================
// Rational communication channels and their gain dynamics.
//
// A channel is a sum of first-order factors b_k/(s - a_k) with stable poles.
// Driven by a transmitter with complex frequency w, each factor's effective
// gain obeys  dg/dt = (a - w) g + b,  whose fixed point b/(w - a) is the
// quasi-static gain: the transfer function evaluated at the transmitter's
// instantaneous complex frequency.
// ============================================================================

#include <vector>

#include "syncscope/envelope.hpp"
#include "syncscope/errors.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// One stable first-order term b/(s - a).  Re(a) < 0 and b != 0 are enforced
/// when the factor is placed into a RationalChannel.
struct FirstOrderFactor {
    Complex pole;    ///< a, Re(a) < 0
    Complex residue; ///< b, nonzero
};

/// Minimum allowed distance from an evaluation point to the pole a.
inline Real pole_guard_radius(const Complex& pole) {
    return 1e-9 * (1.0 + std::abs(pole));
}

/// Classical fourth-order Runge-Kutta stability limit on |lambda * dt|.
inline constexpr Real rk4_stability_limit = 2.785;

/// A strictly proper rational transfer function held in factored form:
/// G(s) = sum_k b_k/(s - a_k), simple poles only.
class RationalChannel {
public:
    /// Validates on construction: at least one factor, stable poles, nonzero
    /// residues, no (near-)repeated poles.
    explicit RationalChannel(std::vector<FirstOrderFactor> factors);

    [[nodiscard]] const std::vector<FirstOrderFactor>& factors() const { return factors_; }

    /// G(s); throws PoleProximityError if s falls inside a pole guard radius.
    [[nodiscard]] Complex evaluate(Complex s) const;

    /// dG/ds = -sum_k b_k/(s - a_k)^2, same pole guard as evaluate().
    [[nodiscard]] Complex derivative(Complex s) const;

private:
    std::vector<FirstOrderFactor> factors_;
};

/// Per-factor dynamic gain states; the channel's total gain is their sum.
struct ChannelGainState {
    std::vector<Complex> factor_gains;

    [[nodiscard]] Complex total() const {
        Complex sum = 0.0;
        for (const Complex& g : factor_gains) sum += g;
        return sum;
    }
};

/// G evaluated at the transmitter's complex frequency (the gain the dynamic
/// states settle to when the transmitter holds w).
Complex quasi_static_gain(const RationalChannel& channel, const ComplexFrequency& w);

/// Per-factor quasi-static gains b_k/(w - a_k), e.g. for initializing states.
ChannelGainState quasi_static_gain_state(const RationalChannel& channel,
                                         const ComplexFrequency& w);

/// Advance the factor gains one step of size dt with classical RK4, holding
/// the transmitter frequency w constant over the step.
/// Throws IntegrationError if dt violates the RK4 stability bound for any
/// factor, or if the state does not match the channel.
ChannelGainState step_gain(const ChannelGainState& state, const ComplexFrequency& w,
                           const RationalChannel& channel, Real dt);

/// Low-pass seen by transmitter-side perturbations of one factor, centred on
/// the carrier:  F(s) = (j w0 - a)/(s + j w0 - a).  F(0) = 1.
Complex baseband_filter(const FirstOrderFactor& factor, Real omega0, Complex s);

/// First-order gain deviation caused by a transmitter frequency deviation:
///   dg = -g0/(j w0 - a) * F(s) * dw_n.
/// g0 is the factor's equilibrium gain at the carrier.
Complex perturb_gain(const FirstOrderFactor& factor, Complex g0, Real omega0,
                     Complex dw_n, Complex s);

/// First-order received-power deviation for angle perturbations dv at the
/// receiving (m) and transmitting (n) ends; only the transmitting end is
/// filtered by F:  dS = S_hat0 * (conj(dv_m) + F * dv_n).
ComplexPower perturb_power(ComplexPower S_hat0, Complex dv_m, Complex dv_n, Complex F);

} // namespace syncscope
