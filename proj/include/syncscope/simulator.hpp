#pragma once

// Nonlinear time-domain simulation of the full modulation / channel /
// demodulation / phase-locking loop.
//
// The simulator works in the envelope (rotating) frame: each node carries an
// envelope angle theta (the phase of its complex envelope, i.e. the absolute
// phase minus the carrier ramp omega0*t) and an absolute angular frequency
// omega, so d theta/dt = omega - omega0.  Amplitudes are carried as
// log-amplitudes but frozen: synchronization studies hold |A| constant.
//
// Channel gains are advanced per directed edge and per first-order factor by
//   dg/dt = (a - w_n) g + b,
// driven by the *transmitter's* complex frequency w_n = j*omega_n (constant
// amplitude), or replaced by their quasi-static values G(j*omega_n) when
// GainMode::QuasiStatic is selected.  Demodulated power, hybrid power and the
// oscillator update close the loop exactly as in the linearized model:
//   H_m d omega_m/dt = (W_m - W*_m) - H_m D_m (omega_m - omega0).
//
// All stages of a step are evaluated inside the RK4 stage derivatives (no
// operator splitting), so the configured equilibrium is a fixed point of the
// discrete map to machine precision.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syncscope/network.hpp"
#include "syncscope/types.hpp"

namespace syncscope {

/// How channel gains evolve during simulation.
enum class GainMode {
    /// Integrate the per-factor gain ODE (full loop).  Requires a network
    /// with explicit rational channels; branch-reduced networks have no
    /// finite factor realization.
    Dynamic,
    /// Replace gains by their quasi-static values G(j*omega_n) at the
    /// transmitter's instantaneous frequency.  Works for both network forms.
    QuasiStatic,
};

/// Instantaneous state perturbation applied at t = 0.
struct Perturbation {
    int node = 0;            ///< node index into the graph
    Real delta_theta = 0.0;  ///< rad, added to the envelope angle
    Real delta_omega = 0.0;  ///< rad/s, added to the absolute frequency
};

/// Simulation run controls.
struct RunOptions {
    Real dt = 1e-4;        ///< integrator step (s)
    Real dt_out = 1e-3;    ///< sampling interval (s); rounded to a multiple of dt
    Real duration = 10.0;  ///< horizon (s)
    GainMode gain_mode = GainMode::Dynamic;
    std::string config_hash;  ///< recorded in the trace for provenance
};

/// Any |omega - omega0| beyond this multiple of omega0 flags divergence.
inline constexpr Real divergence_frequency_factor = 10.0;

/// Full instantaneous state of the simulated system.
struct SystemState {
    Real time = 0.0;
    Vec theta;    ///< per-node envelope angle (rad)
    Vec omega;    ///< per-node absolute angular frequency (rad/s)
    Vec ln_amp;   ///< per-node log-amplitude (nepers); frozen
    /// Per directed channel (graph.directed_channels() order), per first-order
    /// factor.  Empty for branch-reduced networks and in quasi-static use.
    std::vector<CVec> gains;
};

/// Derived per-sample quantities observed from a state.
struct Observation {
    CVec s_hat;      ///< per-node demodulated complex power
    Vec power_w;     ///< per-node hybrid power W
    CVec edge_gains; ///< per directed channel, total gain
};

/// Sampled trajectory plus the metadata needed to reproduce it.
struct SimulationTrace {
    Real dt = 0.0;
    Real dt_out = 0.0;    ///< effective sampling interval (multiple of dt)
    Real duration = 0.0;  ///< requested horizon
    GainMode gain_mode = GainMode::Dynamic;
    std::string config_hash;
    std::vector<Perturbation> perturbations;
    std::vector<std::string> node_ids;
    /// Directed channels as (receiver id, transmitter id), matching gain columns.
    std::vector<std::pair<std::string, std::string>> edge_ids;

    Vec times;   ///< sample instants (s)
    Mat theta;   ///< samples x nodes, envelope angle (rad)
    Mat omega;   ///< samples x nodes, absolute frequency (rad/s)
    Mat power_w; ///< samples x nodes, hybrid power W
    CMat s_hat;  ///< samples x nodes, demodulated complex power
    CMat gains;  ///< samples x directed channels, total channel gain

    bool diverged = false;
    /// Time at which the first bad sample was detected (only when diverged).
    std::optional<Real> divergence_time;

    Eigen::Index samples() const { return times.size(); }
};

/// Builds the equilibrium state: angles and frequencies at the operating
/// point, every gain factor at its steady value b/(j*omega0 - a).  The result
/// is a fixed point of the dynamics (residual below 1e-10).
SystemState init_state(const NetworkGraph& graph, const Equilibrium& eq);

/// Number of packed scalar states for the given mode: 2N in quasi-static
/// mode, 2N + 2 * (total factor count) in dynamic mode.  Frozen amplitudes
/// are not packed.
int packed_dimension(const NetworkGraph& graph, GainMode mode);

/// Flattens [theta, omega, Re/Im gain factors] into one vector.
Vec pack_state(const NetworkGraph& graph, const SystemState& state, GainMode mode);

/// Inverse of pack_state; `state` supplies time and the frozen amplitudes.
void unpack_state(const NetworkGraph& graph, const Vec& x, GainMode mode, SystemState& state);

/// Right-hand side of the coupled ODE system on the packed representation.
Vec state_derivative(const NetworkGraph& graph, const Equilibrium& eq, const Vec& x,
                     const Vec& ln_amp, GainMode mode);

/// Demodulated power, hybrid power, and total edge gains at a state.
Observation observe(const NetworkGraph& graph, const SystemState& state, GainMode mode);

/// Advances the state by one RK4 step of size dt.  Returns false when the
/// advanced state is non-finite or a frequency exceeds the divergence bound;
/// the state is then left at the (bad) post-step values for inspection.
/// Throws IntegrationError when |a - j*omega_n| * dt exceeds the RK4
/// stability bound for some gain factor (dynamic mode).
bool step(SystemState& state, const NetworkGraph& graph, const Equilibrium& eq, Real dt,
          GainMode mode = GainMode::Dynamic);

/// Runs a full simulation: applies the perturbations to the equilibrium
/// state at t = 0, integrates, and samples every dt_out.  On divergence the
/// trace is truncated after the last good sample and flagged.
SimulationTrace run(const NetworkGraph& graph, const Equilibrium& eq,
                    std::span<const Perturbation> perturbations, const RunOptions& options);

/// Central-difference Jacobian of the packed right-hand side at the
/// equilibrium; the local ground truth for stability cross-checks.  Uses the
/// dynamic gain mode for networks with explicit channels and the
/// quasi-static mode for branch-reduced networks.  Per-column steps are
/// scaled as h * (1 + |x_j|) to keep the rounding error of near-cancelling
/// terms (absolute frequencies sit at omega0) well below the truncation
/// error.  The angle rows, whose right-hand side is omega - omega0 by
/// construction, are set to the exact frequency selector instead of being
/// differenced.
Mat linearize_numeric(const NetworkGraph& graph, const Equilibrium& eq, Real h = 1e-6);

} // namespace syncscope
