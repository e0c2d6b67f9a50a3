#include "syncscope/simulator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "syncscope/envelope.hpp"
#include "syncscope/errors.hpp"
#include "syncscope/phase_locking.hpp"

namespace syncscope {

namespace {

// Total gain per directed channel at the state carried in x.  Dynamic mode
// sums the packed factor states; quasi-static mode evaluates the transfer
// functions at each transmitter's instantaneous frequency j*omega_n.
void channel_totals(const NetworkGraph& graph, const Vec& x, GainMode mode, CVec& totals) {
    const auto& dirs = graph.directed_channels();
    const int n = graph.size();
    totals.resize(static_cast<Eigen::Index>(dirs.size()));
    if (mode == GainMode::Dynamic) {
        Eigen::Index offset = 2 * n;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const RationalChannel* ch = graph.channel(dirs[d].to, dirs[d].from);
            Complex sum{0.0, 0.0};
            for (std::size_t k = 0; k < ch->factors().size(); ++k) {
                sum += Complex(x(offset), x(offset + 1));
                offset += 2;
            }
            totals(static_cast<Eigen::Index>(d)) = sum;
        }
        return;
    }
    if (graph.factored()) {
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const RationalChannel* ch = graph.channel(dirs[d].to, dirs[d].from);
            const ComplexFrequency w{0.0, x(n + dirs[d].from)};
            totals(static_cast<Eigen::Index>(d)) = quasi_static_gain(*ch, w);
        }
    } else {
        // One hybrid evaluation per transmitter at its own frequency.
        const ReducedBranchNetwork* red = graph.reduced();
        std::vector<CVec> cols(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            cols[static_cast<std::size_t>(t)] = red->hybrid(Complex(0.0, x(n + t))).col(t);
        }
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            totals(static_cast<Eigen::Index>(d)) =
                cols[static_cast<std::size_t>(dirs[d].from)](dirs[d].to);
        }
    }
}

// S_hat per node: every incoming transmission demodulated against the
// receiver's own signal (the carrier cancels in the envelope frame).
void demodulated_power(const NetworkGraph& graph, const Vec& theta, const Vec& ln_amp,
                       const CVec& totals, CVec& s_hat) {
    const auto& dirs = graph.directed_channels();
    s_hat = CVec::Zero(graph.size());
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const int m = dirs[d].to;
        const int t = dirs[d].from;
        const ComplexAngle tx{ln_amp(t), theta(t)};
        const ComplexAngle rx{ln_amp(m), theta(m)};
        s_hat(m) += totals(static_cast<Eigen::Index>(d)) * complex_power(tx, rx);
    }
}

// Throws when some gain factor's |a - j*omega_n| * dt exceeds the RK4
// stability bound at the current frequencies.
void check_integrator_bound(const NetworkGraph& graph, const Vec& omega, Real dt) {
    const auto& dirs = graph.directed_channels();
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const RationalChannel* ch = graph.channel(dirs[d].to, dirs[d].from);
        for (const FirstOrderFactor& f : ch->factors()) {
            const Complex lambda = f.pole - Complex(0.0, omega(dirs[d].from));
            if (std::abs(lambda) * dt > rk4_stability_limit) {
                throw IntegrationError(
                    "step: dt = " + std::to_string(dt) + " violates the RK4 stability bound for "
                    "channel '" + graph.node(dirs[d].from).id + "' -> '" +
                    graph.node(dirs[d].to).id + "' (|a - jw| dt = " +
                    std::to_string(std::abs(lambda) * dt) + " > " +
                    std::to_string(rk4_stability_limit) + ")");
            }
        }
    }
}

bool within_frequency_bound(const Vec& omega, Real omega0) {
    return ((omega.array() - omega0).abs() <= divergence_frequency_factor * omega0).all();
}

} // namespace

SystemState init_state(const NetworkGraph& graph, const Equilibrium& eq) {
    const int n = graph.size();
    if (static_cast<int>(eq.angle0.size()) != n) {
        throw std::invalid_argument("init_state: equilibrium does not match the graph");
    }
    SystemState state;
    state.time = 0.0;
    state.theta.resize(n);
    state.omega = Vec::Constant(n, eq.omega0);
    state.ln_amp.resize(n);
    for (int i = 0; i < n; ++i) {
        state.theta(i) = eq.angle0[static_cast<std::size_t>(i)].angle;
        state.ln_amp(i) = eq.angle0[static_cast<std::size_t>(i)].ln_amplitude;
    }
    if (graph.factored()) {
        const auto& dirs = graph.directed_channels();
        state.gains.reserve(dirs.size());
        const ComplexFrequency w0{0.0, eq.omega0};
        for (const auto& dir : dirs) {
            const RationalChannel* ch = graph.channel(dir.to, dir.from);
            const ChannelGainState g = quasi_static_gain_state(*ch, w0);
            CVec factors(static_cast<Eigen::Index>(g.factor_gains.size()));
            for (std::size_t k = 0; k < g.factor_gains.size(); ++k) {
                factors(static_cast<Eigen::Index>(k)) = g.factor_gains[k];
            }
            state.gains.push_back(std::move(factors));
        }
    }
    return state;
}

int packed_dimension(const NetworkGraph& graph, GainMode mode) {
    int dim = 2 * graph.size();
    if (mode == GainMode::Dynamic) {
        if (!graph.factored()) {
            throw UnsupportedDynamicsError(
                "dynamic gain simulation requires explicit factored channels; "
                "branch-reduced networks support only the quasi-static mode");
        }
        for (const auto& dir : graph.directed_channels()) {
            dim += 2 * static_cast<int>(graph.channel(dir.to, dir.from)->factors().size());
        }
    }
    return dim;
}

Vec pack_state(const NetworkGraph& graph, const SystemState& state, GainMode mode) {
    const int n = graph.size();
    if (state.theta.size() != n || state.omega.size() != n || state.ln_amp.size() != n) {
        throw std::invalid_argument("pack_state: state dimensions do not match the graph");
    }
    Vec x(packed_dimension(graph, mode));
    x.segment(0, n) = state.theta;
    x.segment(n, n) = state.omega;
    if (mode == GainMode::Dynamic) {
        const auto& dirs = graph.directed_channels();
        if (state.gains.size() != dirs.size()) {
            throw std::invalid_argument(
                "pack_state: gain states do not match the graph's directed channels");
        }
        Eigen::Index offset = 2 * n;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const auto expected =
                static_cast<Eigen::Index>(graph.channel(dirs[d].to, dirs[d].from)->factors().size());
            if (state.gains[d].size() != expected) {
                throw std::invalid_argument("pack_state: factor count mismatch on a channel");
            }
            for (Eigen::Index k = 0; k < expected; ++k) {
                x(offset) = state.gains[d](k).real();
                x(offset + 1) = state.gains[d](k).imag();
                offset += 2;
            }
        }
    }
    return x;
}

void unpack_state(const NetworkGraph& graph, const Vec& x, GainMode mode, SystemState& state) {
    const int n = graph.size();
    if (x.size() != packed_dimension(graph, mode)) {
        throw std::invalid_argument("unpack_state: packed vector has the wrong dimension");
    }
    state.theta = x.segment(0, n);
    state.omega = x.segment(n, n);
    if (mode == GainMode::Dynamic) {
        const auto& dirs = graph.directed_channels();
        state.gains.resize(dirs.size());
        Eigen::Index offset = 2 * n;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const auto count =
                static_cast<Eigen::Index>(graph.channel(dirs[d].to, dirs[d].from)->factors().size());
            state.gains[d].resize(count);
            for (Eigen::Index k = 0; k < count; ++k) {
                state.gains[d](k) = Complex(x(offset), x(offset + 1));
                offset += 2;
            }
        }
    }
}

Vec state_derivative(const NetworkGraph& graph, const Equilibrium& eq, const Vec& x,
                     const Vec& ln_amp, GainMode mode) {
    const int n = graph.size();
    if (x.size() != packed_dimension(graph, mode)) {
        throw std::invalid_argument("state_derivative: packed vector has the wrong dimension");
    }
    if (ln_amp.size() != n) {
        throw std::invalid_argument("state_derivative: ln_amp does not match the graph");
    }
    Vec dx(x.size());

    // d theta/dt = omega - omega0 (envelope frame).
    dx.segment(0, n) = x.segment(n, n).array() - eq.omega0;

    CVec totals;
    channel_totals(graph, x, mode, totals);
    CVec s_hat;
    demodulated_power(graph, x.segment(0, n), ln_amp, totals, s_hat);

    // H dw/dt = (W - W*) - H D (w - w0).
    for (int m = 0; m < n; ++m) {
        const Node& node = graph.node(m);
        const Real W = hybrid_power(s_hat(m), node.epsilon);
        dx(n + m) = (W - eq.W0(m)) / node.inertia - node.damping * (x(n + m) - eq.omega0);
    }

    // dg/dt = (a - j*omega_n) g + b per factor, driven by the transmitter.
    if (mode == GainMode::Dynamic) {
        const auto& dirs = graph.directed_channels();
        Eigen::Index offset = 2 * n;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const RationalChannel* ch = graph.channel(dirs[d].to, dirs[d].from);
            const Complex w{0.0, x(n + dirs[d].from)};
            for (const FirstOrderFactor& f : ch->factors()) {
                const Complex g{x(offset), x(offset + 1)};
                const Complex dg = (f.pole - w) * g + f.residue;
                dx(offset) = dg.real();
                dx(offset + 1) = dg.imag();
                offset += 2;
            }
        }
    }
    return dx;
}

Observation observe(const NetworkGraph& graph, const SystemState& state, GainMode mode) {
    const Vec x = pack_state(graph, state, mode);
    Observation ob;
    channel_totals(graph, x, mode, ob.edge_gains);
    demodulated_power(graph, state.theta, state.ln_amp, ob.edge_gains, ob.s_hat);
    ob.power_w.resize(graph.size());
    for (int m = 0; m < graph.size(); ++m) {
        ob.power_w(m) = hybrid_power(ob.s_hat(m), graph.node(m).epsilon);
    }
    return ob;
}

bool step(SystemState& state, const NetworkGraph& graph, const Equilibrium& eq, Real dt,
          GainMode mode) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw IntegrationError("step: dt must be positive and finite");
    }
    if (mode == GainMode::Dynamic) {
        check_integrator_bound(graph, state.omega, dt);
    }
    Vec x = pack_state(graph, state, mode);
    const Vec k1 = state_derivative(graph, eq, x, state.ln_amp, mode);
    const Vec k2 = state_derivative(graph, eq, Vec(x + 0.5 * dt * k1), state.ln_amp, mode);
    const Vec k3 = state_derivative(graph, eq, Vec(x + 0.5 * dt * k2), state.ln_amp, mode);
    const Vec k4 = state_derivative(graph, eq, Vec(x + dt * k3), state.ln_amp, mode);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    unpack_state(graph, x, mode, state);
    state.time += dt;
    if (!x.allFinite()) return false;
    return within_frequency_bound(state.omega, eq.omega0);
}

SimulationTrace run(const NetworkGraph& graph, const Equilibrium& eq,
                    std::span<const Perturbation> perturbations, const RunOptions& options) {
    if (!(options.dt > 0.0) || !std::isfinite(options.dt)) {
        throw ConfigError("run: dt must be positive and finite");
    }
    if (!(options.duration > 0.0) || !std::isfinite(options.duration)) {
        throw ConfigError("run: duration must be positive and finite");
    }
    if (!(options.dt_out >= options.dt) || !std::isfinite(options.dt_out)) {
        throw ConfigError("run: dt_out must be finite and at least dt");
    }
    const int n = graph.size();
    for (const Perturbation& p : perturbations) {
        if (p.node < 0 || p.node >= n) {
            throw ConfigError("run: perturbation references node index " + std::to_string(p.node) +
                              " outside the graph");
        }
        if (!std::isfinite(p.delta_theta) || !std::isfinite(p.delta_omega)) {
            throw ConfigError("run: perturbation values must be finite");
        }
    }

    SystemState state = init_state(graph, eq);
    for (const Perturbation& p : perturbations) {
        state.theta(p.node) += p.delta_theta;
        state.omega(p.node) += p.delta_omega;
    }
    // Validate the mode/graph pairing before anything touches channel data:
    // branch-reduced graphs carry no factored channels to integrate.
    (void)packed_dimension(graph, options.gain_mode);
    // A dt that is invalid already at the initial frequencies is a caller
    // error; mid-run violations (frequencies running away) flag divergence.
    if (options.gain_mode == GainMode::Dynamic) {
        check_integrator_bound(graph, state.omega, options.dt);
    }

    const auto stride = std::max<long>(1, std::lround(options.dt_out / options.dt));
    const auto total_steps = std::max<long>(1, std::lround(options.duration / options.dt));
    const long nsamples = total_steps / stride + 1;
    const auto edge_count = static_cast<Eigen::Index>(graph.directed_channels().size());

    SimulationTrace trace;
    trace.dt = options.dt;
    trace.dt_out = static_cast<Real>(stride) * options.dt;
    trace.duration = options.duration;
    trace.gain_mode = options.gain_mode;
    trace.config_hash = options.config_hash;
    trace.perturbations.assign(perturbations.begin(), perturbations.end());
    trace.node_ids.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) trace.node_ids.push_back(graph.node(i).id);
    for (const auto& dir : graph.directed_channels()) {
        trace.edge_ids.emplace_back(graph.node(dir.to).id, graph.node(dir.from).id);
    }
    trace.times.resize(nsamples);
    trace.theta.resize(nsamples, n);
    trace.omega.resize(nsamples, n);
    trace.power_w.resize(nsamples, n);
    trace.s_hat.resize(nsamples, n);
    trace.gains.resize(nsamples, edge_count);

    Eigen::Index row = 0;
    const auto record = [&]() {
        const Observation ob = observe(graph, state, options.gain_mode);
        trace.times(row) = state.time;
        trace.theta.row(row) = state.theta.transpose();
        trace.omega.row(row) = state.omega.transpose();
        trace.power_w.row(row) = ob.power_w.transpose();
        trace.s_hat.row(row) = ob.s_hat.transpose();
        trace.gains.row(row) = ob.edge_gains.transpose();
        ++row;
    };
    record();

    for (long i = 1; i <= total_steps; ++i) {
        bool ok = false;
        try {
            ok = step(state, graph, eq, options.dt, options.gain_mode);
        } catch (const IntegrationError&) {
            ok = false; // frequencies ran beyond the integrator bound
        }
        state.time = static_cast<Real>(i) * options.dt;
        if (!ok) {
            trace.diverged = true;
            trace.divergence_time = state.time;
            break;
        }
        if (i % stride == 0) record();
    }

    if (row < nsamples) {
        trace.times.conservativeResize(row);
        trace.theta.conservativeResize(row, n);
        trace.omega.conservativeResize(row, n);
        trace.power_w.conservativeResize(row, n);
        trace.s_hat.conservativeResize(row, n);
        trace.gains.conservativeResize(row, edge_count);
    }
    return trace;
}

Mat linearize_numeric(const NetworkGraph& graph, const Equilibrium& eq, Real h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw std::invalid_argument("linearize_numeric: h must be positive and finite");
    }
    const GainMode mode = graph.factored() ? GainMode::Dynamic : GainMode::QuasiStatic;
    const SystemState state = init_state(graph, eq);
    const Vec x0 = pack_state(graph, state, mode);
    const Eigen::Index dim = x0.size();
    Mat jac(dim, dim);
    Vec xp(dim), xm(dim);
    for (Eigen::Index col = 0; col < dim; ++col) {
        const Real hj = h * (1.0 + std::abs(x0(col)));
        xp = x0;
        xm = x0;
        xp(col) += hj;
        xm(col) -= hj;
        jac.col(col) = (state_derivative(graph, eq, xp, state.ln_amp, mode) -
                        state_derivative(graph, eq, xm, state.ln_amp, mode)) /
                       (2.0 * hj);
    }
    // The angle rows are linear in the frequencies by construction; write the
    // exact selector instead of the differenced (rounded) version.
    const int n = graph.size();
    jac.topRows(n).setZero();
    jac.block(0, n, n, n).setIdentity();
    return jac;
}

} // namespace syncscope
