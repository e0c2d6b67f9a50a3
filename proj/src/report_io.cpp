#include "syncscope/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <string_view>

namespace syncscope {

namespace {

std::string fmt_real(Real x) {
    if (!std::isfinite(x)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_complex(Complex z) {
    return "[" + fmt_real(z.real()) + ", " + fmt_real(z.imag()) + "]";
}

std::string json_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out.push_back(c);
                }
        }
    }
    out.push_back('"');
    return out;
}

const char* gain_mode_name(GainMode mode) {
    return mode == GainMode::Dynamic ? "dynamic" : "quasistatic";
}

std::string string_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += json_escape(items[i]);
    }
    return out + "]";
}

// One row of a real matrix as a JSON array.
std::string real_row(const Mat& m, Eigen::Index row) {
    std::string out = "[";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c > 0) out += ", ";
        out += fmt_real(m(row, c));
    }
    return out + "]";
}

std::string complex_row(const CMat& m, Eigen::Index row) {
    std::string out = "[";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c > 0) out += ", ";
        out += fmt_complex(m(row, c));
    }
    return out + "]";
}

} // namespace

std::string report_json(const StabilityReport& report, const ReportContext& ctx) {
    std::string out;
    out.reserve(2048);
    out += "{\n";
    out += "  \"tool\": \"syncscope\",\n";
    out += "  \"report\": \"stability\",\n";
    out += "  \"config_hash\": " + json_escape(ctx.config_hash) + ",\n";
    out += "  \"omega0\": " + fmt_real(ctx.omega0) + ",\n";
    out += "  \"damping\": " + fmt_real(report.damping) + ",\n";
    out += std::string("  \"verdict\": ") +
           (report.verdict == Verdict::CertifiedStable ? "\"CertifiedStable\"" : "\"NotCertified\"") +
           ",\n";
    out += "  \"sigma_max\": " + fmt_real(report.sigma_max_value) + ",\n";
    out += "  \"min_zeta\": " + fmt_real(report.min_zeta) + ",\n";
    out += "  \"max_zeta\": " + fmt_real(report.max_zeta) + ",\n";
    out += "  \"margin\": " + fmt_real(report.margin) + ",\n";
    out += "  \"margin_max\": " + fmt_real(report.margin_max) + ",\n";
    out += "  \"phi_cond\": " + fmt_real(report.phi_cond) + ",\n";
    out += "  \"modes\": [\n";
    for (std::size_t i = 0; i < report.modes.size(); ++i) {
        const ModeResult& m = report.modes[i];
        out += "    {\"xi\": " + fmt_complex(m.xi) + ", \"zeta\": " + fmt_real(m.zeta) +
               ", \"argmin\": " + fmt_complex(m.argmin) +
               ", \"pass\": " + (m.pass ? "true" : "false") +
               ", \"interior_zero\": " + (m.interior_zero ? "true" : "false") +
               ", \"winding_uncertain\": " + (m.winding_uncertain ? "true" : "false") + "}";
        out += i + 1 < report.modes.size() ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"notes\": " + string_list(report.notes) + "\n";
    out += "}\n";
    return out;
}

std::string modes_json(const SynchronizationModel& model, const ReportContext& ctx) {
    const Eigen::Index n = model.xi.size();
    const CMat residual_matrix =
        model.K_H.cast<Complex>() * model.Phi - model.Phi * model.xi.asDiagonal();
    const Real residual = residual_matrix.cwiseAbs().maxCoeff();

    std::string out;
    out.reserve(2048);
    out += "{\n";
    out += "  \"tool\": \"syncscope\",\n";
    out += "  \"report\": \"modes\",\n";
    out += "  \"config_hash\": " + json_escape(ctx.config_hash) + ",\n";
    out += "  \"omega0\": " + fmt_real(ctx.omega0) + ",\n";
    out += "  \"xi\": [";
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0) out += ", ";
        out += fmt_complex(model.xi(i));
    }
    out += "],\n";
    out += "  \"phi_cond\": " + fmt_real(model.phi_cond) + ",\n";
    out += "  \"eigen_residual\": " + fmt_real(residual) + ",\n";
    // participation[k][m]: |Phi_mk|, how strongly node m moves in mode k
    out += "  \"participation\": [\n";
    for (Eigen::Index k = 0; k < n; ++k) {
        out += "    [";
        for (Eigen::Index m = 0; m < n; ++m) {
            if (m > 0) out += ", ";
            out += fmt_real(std::abs(model.Phi(m, k)));
        }
        out += k + 1 < n ? "],\n" : "]\n";
    }
    out += "  ],\n";
    out += "  \"gamma_h_phi\": [\n";
    for (Eigen::Index r = 0; r < n; ++r) {
        out += "    " + complex_row(model.Gamma_H_Phi, r);
        out += r + 1 < n ? ",\n" : "\n";
    }
    out += "  ],\n";
    out += "  \"sigma_max\": " + fmt_real(sigma_max(model.Gamma_H_Phi)) + "\n";
    out += "}\n";
    return out;
}

std::string trace_json(const SimulationTrace& trace) {
    const Eigen::Index samples = trace.samples();
    const Eigen::Index n = trace.theta.cols();

    std::string out;
    out.reserve(static_cast<std::size_t>(samples) * 64 + 1024);
    out += "{\n";
    out += "  \"tool\": \"syncscope\",\n";
    out += "  \"report\": \"trace\",\n";
    out += "  \"config_hash\": " + json_escape(trace.config_hash) + ",\n";
    out += std::string("  \"gain_mode\": \"") + gain_mode_name(trace.gain_mode) + "\",\n";
    out += "  \"dt\": " + fmt_real(trace.dt) + ",\n";
    out += "  \"dt_out\": " + fmt_real(trace.dt_out) + ",\n";
    out += "  \"duration\": " + fmt_real(trace.duration) + ",\n";
    out += std::string("  \"diverged\": ") + (trace.diverged ? "true" : "false") + ",\n";
    out += "  \"divergence_time\": " +
           (trace.divergence_time ? fmt_real(*trace.divergence_time) : std::string("null")) +
           ",\n";
    out += "  \"perturbations\": [";
    for (std::size_t i = 0; i < trace.perturbations.size(); ++i) {
        const Perturbation& p = trace.perturbations[i];
        if (i > 0) out += ", ";
        out += "{\"node\": " + json_escape(trace.node_ids[static_cast<std::size_t>(p.node)]) +
               ", \"delta_theta\": " + fmt_real(p.delta_theta) +
               ", \"delta_omega\": " + fmt_real(p.delta_omega) + "}";
    }
    out += "],\n";
    out += "  \"nodes\": " + string_list(trace.node_ids) + ",\n";
    out += "  \"edges\": [";
    for (std::size_t i = 0; i < trace.edge_ids.size(); ++i) {
        if (i > 0) out += ", ";
        out += "[" + json_escape(trace.edge_ids[i].first) + ", " +
               json_escape(trace.edge_ids[i].second) + "]";
    }
    out += "],\n";
    out += "  \"times\": [";
    for (Eigen::Index i = 0; i < samples; ++i) {
        if (i > 0) out += ", ";
        out += fmt_real(trace.times(i));
    }
    out += "],\n";
    const auto real_block = [&](const char* key, const Mat& m) {
        out += std::string("  \"") + key + "\": [";
        for (Eigen::Index r = 0; r < samples; ++r) {
            if (r > 0) out += ", ";
            out += real_row(m, r);
        }
        out += "]";
    };
    const auto complex_block = [&](const char* key, const CMat& m) {
        out += std::string("  \"") + key + "\": [";
        for (Eigen::Index r = 0; r < samples; ++r) {
            if (r > 0) out += ", ";
            out += complex_row(m, r);
        }
        out += "]";
    };
    real_block("theta", trace.theta);
    out += ",\n";
    real_block("omega", trace.omega);
    out += ",\n";
    real_block("power_w", trace.power_w);
    out += ",\n";
    complex_block("s_hat", trace.s_hat);
    out += ",\n";
    complex_block("gains", trace.gains);
    out += "\n}\n";
    (void)n;
    return out;
}

std::string trace_csv(const SimulationTrace& trace) {
    const Eigen::Index samples = trace.samples();
    const Eigen::Index n = trace.theta.cols();

    std::string out;
    out.reserve(static_cast<std::size_t>(samples) * 64 + 1024);
    out += "# tool: syncscope\n";
    out += "# report: trace\n";
    out += "# config_hash: " + trace.config_hash + "\n";
    out += std::string("# gain_mode: ") + gain_mode_name(trace.gain_mode) + "\n";
    out += "# dt: " + fmt_real(trace.dt) + "\n";
    out += "# dt_out: " + fmt_real(trace.dt_out) + "\n";
    out += "# duration: " + fmt_real(trace.duration) + "\n";
    out += std::string("# diverged: ") + (trace.diverged ? "true" : "false") + "\n";
    if (trace.divergence_time) {
        out += "# divergence_time: " + fmt_real(*trace.divergence_time) + "\n";
    }
    for (const Perturbation& p : trace.perturbations) {
        out += "# perturbation: node=" + trace.node_ids[static_cast<std::size_t>(p.node)] +
               " delta_theta=" + fmt_real(p.delta_theta) +
               " delta_omega=" + fmt_real(p.delta_omega) + "\n";
    }
    out += "time";
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string& id = trace.node_ids[static_cast<std::size_t>(i)];
        out += ",theta[" + id + "],omega[" + id + "],W[" + id + "],S_re[" + id + "],S_im[" + id +
               "]";
    }
    for (const auto& [to, from] : trace.edge_ids) {
        out += ",g_re[" + to + "<-" + from + "],g_im[" + to + "<-" + from + "]";
    }
    out += "\n";
    for (Eigen::Index r = 0; r < samples; ++r) {
        out += fmt_real(trace.times(r));
        for (Eigen::Index i = 0; i < n; ++i) {
            out += "," + fmt_real(trace.theta(r, i)) + "," + fmt_real(trace.omega(r, i)) + "," +
                   fmt_real(trace.power_w(r, i)) + "," + fmt_real(trace.s_hat(r, i).real()) + "," +
                   fmt_real(trace.s_hat(r, i).imag());
        }
        for (Eigen::Index e = 0; e < trace.gains.cols(); ++e) {
            out += "," + fmt_real(trace.gains(r, e).real()) + "," +
                   fmt_real(trace.gains(r, e).imag());
        }
        out += "\n";
    }
    return out;
}

std::string sweeps_csv(const StabilityReport& report, const ReportContext& ctx) {
    std::string out;
    out += "# tool: syncscope\n";
    out += "# report: zeta-sweeps\n";
    out += "# config_hash: " + ctx.config_hash + "\n";
    out += "# sigma_max: " + fmt_real(report.sigma_max_value) + "\n";
    for (std::size_t k = 0; k < report.modes.size(); ++k) {
        const ModeResult& m = report.modes[k];
        out += "# mode " + std::to_string(k) + ": xi=(" + fmt_real(m.xi.real()) + "," +
               fmt_real(m.xi.imag()) + ") zeta=" + fmt_real(m.zeta) + "\n";
    }
    out += "mode,omega,magnitude\n";
    for (std::size_t k = 0; k < report.modes.size(); ++k) {
        for (const auto& [w, mag] : report.modes[k].sweep) {
            out += std::to_string(k) + "," + fmt_real(w) + "," + fmt_real(mag) + "\n";
        }
    }
    return out;
}

std::string forbidden_csv(const StabilityReport& report, const ReportContext& ctx) {
    std::string out;
    out += "# tool: syncscope\n";
    out += "# report: forbidden-region\n";
    out += "# config_hash: " + ctx.config_hash + "\n";
    out += "# boundary trace of -s/T(s) = -s(s+D) at s=jw; D=" + fmt_real(report.damping) + "\n";
    out += "omega,re,im\n";
    for (const auto& [w, point] : report.forbidden_region) {
        out += fmt_real(w) + "," + fmt_real(point.real()) + "," + fmt_real(point.imag()) + "\n";
    }
    return out;
}

} // namespace syncscope
