#include "syncscope/channel.hpp"

#include <cmath>
#include <string>

namespace syncscope {

namespace {

bool finite(const Complex& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

void check_pole_distance(const Complex& s, const FirstOrderFactor& factor,
                         std::size_t index, const char* op) {
    if (std::abs(s - factor.pole) < pole_guard_radius(factor.pole)) {
        throw PoleProximityError(std::string(op) + ": evaluation point within guard radius of factor " +
                                 std::to_string(index) + " (pole " + std::to_string(factor.pole.real()) +
                                 (factor.pole.imag() < 0 ? "-" : "+") +
                                 std::to_string(std::abs(factor.pole.imag())) + "j)");
    }
}

} // namespace

RationalChannel::RationalChannel(std::vector<FirstOrderFactor> factors)
    : factors_(std::move(factors)) {
    if (factors_.empty()) {
        throw ConfigError("RationalChannel: at least one factor required");
    }
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        const auto& f = factors_[k];
        if (!finite(f.pole) || !finite(f.residue)) {
            throw ConfigError("RationalChannel: non-finite pole or residue in factor " +
                              std::to_string(k));
        }
        if (!(f.pole.real() < 0.0)) {
            throw ConfigError("RationalChannel: factor " + std::to_string(k) +
                              " has a non-stable pole (Re >= 0)");
        }
        if (std::abs(f.residue) == 0.0) {
            throw ConfigError("RationalChannel: factor " + std::to_string(k) +
                              " has zero residue");
        }
    }
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        for (std::size_t k = i + 1; k < factors_.size(); ++k) {
            const Real guard = std::max(pole_guard_radius(factors_[i].pole),
                                        pole_guard_radius(factors_[k].pole));
            if (std::abs(factors_[i].pole - factors_[k].pole) < guard) {
                throw PoleProximityError("RationalChannel: factors " + std::to_string(i) +
                                         " and " + std::to_string(k) +
                                         " have (near-)repeated poles; simple poles required");
            }
        }
    }
}

Complex RationalChannel::evaluate(Complex s) const {
    Complex sum = 0.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        check_pole_distance(s, factors_[k], k, "evaluate");
        sum += factors_[k].residue / (s - factors_[k].pole);
    }
    return sum;
}

Complex RationalChannel::derivative(Complex s) const {
    Complex sum = 0.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        check_pole_distance(s, factors_[k], k, "derivative");
        const Complex d = s - factors_[k].pole;
        sum -= factors_[k].residue / (d * d);
    }
    return sum;
}

Complex quasi_static_gain(const RationalChannel& channel, const ComplexFrequency& w) {
    return channel.evaluate(as_complex(w));
}

ChannelGainState quasi_static_gain_state(const RationalChannel& channel,
                                         const ComplexFrequency& w) {
    const Complex s = as_complex(w);
    ChannelGainState state;
    state.factor_gains.reserve(channel.factors().size());
    for (std::size_t k = 0; k < channel.factors().size(); ++k) {
        check_pole_distance(s, channel.factors()[k], k, "quasi_static_gain_state");
        const auto& f = channel.factors()[k];
        state.factor_gains.push_back(f.residue / (s - f.pole));
    }
    return state;
}

ChannelGainState step_gain(const ChannelGainState& state, const ComplexFrequency& w,
                           const RationalChannel& channel, Real dt) {
    const auto& factors = channel.factors();
    if (state.factor_gains.size() != factors.size()) {
        throw IntegrationError("step_gain: state has " + std::to_string(state.factor_gains.size()) +
                               " gains but the channel has " + std::to_string(factors.size()) +
                               " factors");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw IntegrationError("step_gain: dt must be positive and finite");
    }
    const Complex wc = as_complex(w);
    ChannelGainState next;
    next.factor_gains.resize(factors.size());
    for (std::size_t k = 0; k < factors.size(); ++k) {
        const Complex lambda = factors[k].pole - wc;
        if (std::abs(lambda) * dt > rk4_stability_limit) {
            throw IntegrationError("step_gain: dt = " + std::to_string(dt) +
                                   " exceeds the RK4 stability bound for factor " +
                                   std::to_string(k));
        }
        const Complex b = factors[k].residue;
        const Complex g = state.factor_gains[k];
        if (!finite(g)) {
            throw IntegrationError("step_gain: non-finite gain state in factor " +
                                   std::to_string(k));
        }
        const Complex k1 = lambda * g + b;
        const Complex k2 = lambda * (g + 0.5 * dt * k1) + b;
        const Complex k3 = lambda * (g + 0.5 * dt * k2) + b;
        const Complex k4 = lambda * (g + dt * k3) + b;
        next.factor_gains[k] = g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return next;
}

Complex baseband_filter(const FirstOrderFactor& factor, Real omega0, Complex s) {
    const Complex bandwidth = Complex(0.0, omega0) - factor.pole;
    if (std::abs(bandwidth) < pole_guard_radius(factor.pole)) {
        throw DegenerateChannelError("baseband_filter: pole coincides with the carrier j*omega0");
    }
    const Complex denom = s + bandwidth;
    if (std::abs(denom) < pole_guard_radius(factor.pole)) {
        throw PoleProximityError("baseband_filter: s within guard radius of the baseband pole");
    }
    return bandwidth / denom;
}

Complex perturb_gain(const FirstOrderFactor& factor, Complex g0, Real omega0,
                     Complex dw_n, Complex s) {
    const Complex bandwidth = Complex(0.0, omega0) - factor.pole;
    if (std::abs(bandwidth) < pole_guard_radius(factor.pole)) {
        throw DegenerateChannelError("perturb_gain: pole coincides with the carrier j*omega0");
    }
    return -g0 / bandwidth * baseband_filter(factor, omega0, s) * dw_n;
}

ComplexPower perturb_power(ComplexPower S_hat0, Complex dv_m, Complex dv_n, Complex F) {
    return S_hat0 * (std::conj(dv_m) + F * dv_n);
}

} // namespace syncscope
