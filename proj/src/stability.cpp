#include "syncscope/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <future>
#include <limits>

namespace syncscope {

namespace {

// |phi(j w)| with phi(s) = (xi + s/T(s))/s and s/T(s) = s(s + D).
Real boundary_abs(Complex xi, Real damping, Real w) {
    const Complex num = xi + Complex(-w * w, damping * w);
    return std::abs(num) / std::abs(w);
}

Real golden_section(Complex xi, Real damping, Real lo, Real hi, Real rel_tol) {
    constexpr Real inv_phi = 0.6180339887498949;
    Real a = lo, b = hi;
    Real x1 = b - inv_phi * (b - a);
    Real x2 = a + inv_phi * (b - a);
    Real f1 = boundary_abs(xi, damping, x1);
    Real f2 = boundary_abs(xi, damping, x2);
    const Real scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
    while ((b - a) > rel_tol * scale) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = boundary_abs(xi, damping, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = boundary_abs(xi, damping, x2);
        }
    }
    return 0.5 * (a + b);
}

struct Winding {
    int count = 0;
    bool uncertain = false;
};

// Argument-principle winding count of N(s) = s^2 + D s + xi along the
// boundary of {Re(s) > rho} cut by |s| = radius.  The vertical segment is
// nudged off the axis so boundary zeros (marginal modes) are not enclosed.
Winding winding_count(Complex xi, Real damping) {
    const Real radius = 2.0 * (1.0 + damping + std::sqrt(std::abs(xi)));
    const Real rho = 1e-9 * radius;
    auto N = [&](Complex s) { return s * s + damping * s + xi; };

    std::vector<Complex> points;
    const int segment_points = 513;
    const int arc_points = 1025;
    points.reserve(segment_points + arc_points);
    for (int i = 0; i < segment_points; ++i) {
        const Real y = -radius + 2.0 * radius * static_cast<Real>(i) / (segment_points - 1);
        points.emplace_back(rho, y);
    }
    // Arc from +j*radius through +radius down to -j*radius; the final closing
    // edge (handled below) hops the short gap back to the segment start.
    for (int i = 1; i < arc_points; ++i) {
        const Real t = 0.5 * pi - pi * static_cast<Real>(i) / (arc_points - 1);
        points.emplace_back(radius * std::cos(t), radius * std::sin(t));
    }

    Winding result;
    Real total = 0.0;
    // Accumulate arg increments; bisect any segment whose increment is
    // ambiguous (>= pi/2) up to a depth cap.
    std::function<void(Complex, Complex, int)> accumulate = [&](Complex a, Complex b, int depth) {
        const Complex na = N(a);
        const Complex nb = N(b);
        if (std::abs(na) == 0.0 || std::abs(nb) == 0.0) {
            result.uncertain = true;
            return;
        }
        const Real d = std::arg(nb / na);
        if (std::abs(d) < 0.5 * pi) {
            total += d;
            return;
        }
        if (depth >= 48) {
            result.uncertain = true;
            total += d;
            return;
        }
        const Complex mid = 0.5 * (a + b);
        accumulate(a, mid, depth + 1);
        accumulate(mid, b, depth + 1);
    };
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        accumulate(points[i], points[i + 1], 0);
    }
    accumulate(points.back(), points.front(), 0);
    result.count = static_cast<int>(std::abs(std::lround(total / (2.0 * pi))));
    return result;
}

void check_grid(const FrequencyGrid& grid) {
    if (!(grid.omega_min > 0.0) || !(grid.omega_max > grid.omega_min) || grid.points < 2) {
        throw ConfigError("FrequencyGrid: require 0 < omega_min < omega_max and points >= 2");
    }
    if (!(grid.refine_rel_tol > 0.0)) {
        throw ConfigError("FrequencyGrid: refine_rel_tol must be positive");
    }
}

} // namespace

ZetaResult zeta(Complex xi, const InertiaDynamics& dynamics, const FrequencyGrid& grid) {
    if (dynamics.damping < 0.0 || !std::isfinite(dynamics.damping)) {
        throw UnsupportedDynamicsError(
            "zeta: inertia dynamics with negative damping have a right-half-plane pole");
    }
    check_grid(grid);
    const Real D = dynamics.damping;

    // Coarse log-spaced sweep over both signs of omega (modes come in
    // conjugate pairs; the boundary is not symmetric for complex xi).
    const int n = grid.points;
    const Real log_lo = std::log(grid.omega_min);
    const Real log_hi = std::log(grid.omega_max);
    std::vector<Real> omegas;
    omegas.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Real w = std::exp(log_lo + (log_hi - log_lo) * static_cast<Real>(i) / (n - 1));
        omegas.push_back(w);
    }
    for (int i = 0; i < n; ++i) omegas.push_back(-omegas[static_cast<std::size_t>(i)]);

    std::size_t best = 0;
    Real best_val = std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const Real v = boundary_abs(xi, D, omegas[i]);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }

    // Refine within the bracketing neighbours on the same sign branch.
    const std::size_t branch_lo = best < static_cast<std::size_t>(n) ? 0 : static_cast<std::size_t>(n);
    const std::size_t branch_hi = branch_lo + static_cast<std::size_t>(n) - 1;
    const std::size_t ilo = best > branch_lo ? best - 1 : best;
    const std::size_t ihi = best < branch_hi ? best + 1 : best;
    Real w_star = omegas[best];
    if (ilo != ihi) {
        const Real lo = std::min(omegas[ilo], omegas[ihi]);
        const Real hi = std::max(omegas[ilo], omegas[ihi]);
        const Real w_refined = golden_section(xi, D, lo, hi, grid.refine_rel_tol);
        const Real refined = boundary_abs(xi, D, w_refined);
        if (refined < best_val) {
            best_val = refined;
            w_star = w_refined;
        }
    }

    ZetaResult result;
    result.boundary_min = best_val;
    result.zeta = best_val;
    result.argmin = Complex(0.0, w_star);

    // s -> 0 limit exists only for the rigid mode (xi = 0): |1/T(0)| = D.
    if (std::abs(xi) < 1e-12 * (1.0 + D) && D < result.zeta) {
        result.zeta = D;
        result.boundary_min = std::min(result.boundary_min, D);
        result.argmin = Complex(0.0, 0.0);
    }

    const Winding wind = winding_count(xi, D);
    result.winding_uncertain = wind.uncertain;
    if (wind.count > 0 && !wind.uncertain) {
        // A zero of xi + s/T(s) strictly inside Re(s) > 0: the infimum is 0.
        result.interior_zero = true;
        result.zeta = 0.0;
        const Complex disc = std::sqrt(Complex(D * D, 0.0) - 4.0 * xi);
        const Complex r1 = 0.5 * (-D + disc);
        const Complex r2 = 0.5 * (-D - disc);
        result.argmin = r1.real() >= r2.real() ? r1 : r2;
    }
    return result;
}

Real sigma_max(const CMat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(m);
    return svd.singularValues()(0);
}

StabilityReport evaluate_criterion(const SynchronizationModel& model,
                                   const InertiaDynamics& dynamics,
                                   const CriterionOptions& options) {
    check_grid(options.grid);
    if (options.threads < 1) {
        throw ConfigError("CriterionOptions: threads must be >= 1");
    }
    if (options.record_sweeps && options.sweep_samples < 2) {
        throw ConfigError("CriterionOptions: sweep_samples must be >= 2");
    }
    if (options.forbidden_samples < 2) {
        throw ConfigError("CriterionOptions: forbidden_samples must be >= 2");
    }
    const int n = static_cast<int>(model.xi.size());
    StabilityReport report;
    report.modes.resize(static_cast<std::size_t>(n));
    report.damping = dynamics.damping;
    report.phi_cond = model.phi_cond;

    auto evaluate_mode = [&](int m) {
        ModeResult& mode = report.modes[static_cast<std::size_t>(m)];
        mode.xi = model.xi(m);
        const ZetaResult z = zeta(mode.xi, dynamics, options.grid);
        mode.zeta = z.zeta;
        mode.argmin = z.argmin;
        mode.interior_zero = z.interior_zero;
        mode.winding_uncertain = z.winding_uncertain;
        if (options.record_sweeps) {
            const int count = options.sweep_samples;
            mode.sweep.reserve(static_cast<std::size_t>(count));
            const Real log_lo = std::log(options.grid.omega_min);
            const Real log_hi = std::log(options.grid.omega_max);
            for (int i = 0; i < count; ++i) {
                const Real w = std::exp(log_lo + (log_hi - log_lo) * static_cast<Real>(i) / (count - 1));
                mode.sweep.emplace_back(w, boundary_abs(mode.xi, dynamics.damping, w));
            }
        }
    };

    const int threads = std::max(1, options.threads);
    if (threads == 1 || n <= 1) {
        for (int m = 0; m < n; ++m) evaluate_mode(m);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<int> next{0};
        const int workers = std::min(threads, n);
        futures.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            futures.push_back(std::async(std::launch::async, [&]() {
                for (int m = next.fetch_add(1); m < n; m = next.fetch_add(1)) evaluate_mode(m);
            }));
        }
        for (auto& f : futures) f.get();
    }

    report.sigma_max_value = sigma_max(model.Gamma_H_Phi);
    report.min_zeta = std::numeric_limits<Real>::infinity();
    report.max_zeta = 0.0;
    bool all_pass = true;
    for (auto& mode : report.modes) {
        mode.pass = mode.zeta > report.sigma_max_value;
        all_pass = all_pass && mode.pass;
        report.min_zeta = std::min(report.min_zeta, mode.zeta);
        report.max_zeta = std::max(report.max_zeta, mode.zeta);
        if (mode.interior_zero) {
            report.notes.push_back("mode with xi = (" + std::to_string(mode.xi.real()) + ", " +
                                   std::to_string(mode.xi.imag()) +
                                   "): right-half-plane zero of the mode dynamics; zeta = 0");
        }
        if (mode.winding_uncertain) {
            report.notes.push_back("mode with xi = (" + std::to_string(mode.xi.real()) + ", " +
                                   std::to_string(mode.xi.imag()) +
                                   "): winding count uncertain (zero close to the boundary)");
        }
    }
    if (n == 0) report.min_zeta = 0.0;
    report.margin = report.min_zeta - report.sigma_max_value;
    report.margin_max = report.max_zeta - report.sigma_max_value;
    report.verdict = all_pass && n > 0 ? Verdict::CertifiedStable : Verdict::NotCertified;

    // Positive-frequency branch only: the omega < 0 half of the locus is the
    // complex conjugate of these points.
    const int fsamples = options.forbidden_samples;
    report.forbidden_region.reserve(static_cast<std::size_t>(fsamples));
    const Real log_lo = std::log(options.grid.omega_min);
    const Real log_hi = std::log(options.grid.omega_max);
    for (int i = 0; i < fsamples; ++i) {
        const Real w = std::exp(log_lo + (log_hi - log_lo) * static_cast<Real>(i) / (fsamples - 1));
        // -s/T(s) = -s(s+D) at s = j w
        report.forbidden_region.emplace_back(w, Complex(w * w, -dynamics.damping * w));
    }
    return report;
}

CMat loop_gain(const SynchronizationModel& model, const InertiaDynamics& dynamics, Complex s) {
    if (std::abs(s) < 1e-300) {
        throw std::invalid_argument("loop_gain: s = 0 is not an evaluation point");
    }
    const int n = static_cast<int>(model.xi.size());
    CVec inv_diag(n);
    for (int m = 0; m < n; ++m) {
        const Complex d = dynamics.inverse_transfer(s) + model.xi(m) / s;
        const Real scale = std::abs(dynamics.inverse_transfer(s)) + std::abs(model.xi(m) / s);
        if (std::abs(d) <= 1e-12 * (scale + 1e-300)) {
            throw ResonanceError("loop_gain: mode " + std::to_string(m) +
                                 " resonates at the requested s");
        }
        inv_diag(m) = 1.0 / d;
    }
    return model.Gamma_H_Phi * inv_diag.asDiagonal();
}

} // namespace syncscope
