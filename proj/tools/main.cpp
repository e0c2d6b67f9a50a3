// syncscope command-line interface: analyze / simulate / modes.
//
// Exit codes are a stable contract:
//   0  success (analyze: CertifiedStable)
//   2  analyze completed with verdict NotCertified
//   3  simulate completed but the trace diverged
//   1  any error (bad flags, unreadable/invalid config, numerical guards)

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "syncscope/config.hpp"
#include "syncscope/errors.hpp"
#include "syncscope/report_io.hpp"

namespace {

using namespace syncscope;

int env_threads() {
    const char* v = std::getenv("SYNCSCOPE_THREADS");
    if (v == nullptr || *v == '\0') {
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    char* end = nullptr;
    const long parsed = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || parsed < 1 || parsed > 4096) {
        throw ConfigError("SYNCSCOPE_THREADS must be a positive integer, got '" + std::string(v) +
                          "'");
    }
    return static_cast<int>(parsed);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw ConfigError("failed reading config file '" + path + "'");
    return ss.str();
}

void write_output(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << content;
        if (!std::cout.good()) throw Error("failed writing to stdout");
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open output file '" + out_path + "'");
    out << content;
    out.flush();
    if (!out.good()) throw Error("failed writing output file '" + out_path + "'");
}

/// "report.json" -> "report"; anything without the suffix stays as-is.
std::string strip_json_suffix(const std::string& path) {
    constexpr std::string_view suffix = ".json";
    if (path.size() > suffix.size() && path.ends_with(suffix)) {
        return path.substr(0, path.size() - suffix.size());
    }
    return path;
}

struct LoadedConfig {
    std::string hash;
    SystemConfig config;
};

LoadedConfig load(const std::string& path) {
    const std::string text = read_file(path);
    return {config_digest(text), parse_config(text)};
}

int cmd_analyze(const std::string& config_path, const std::string& out, bool csv) {
    if (csv && out.empty()) {
        throw ConfigError("--csv needs --out to derive the sweep file names");
    }
    const LoadedConfig loaded = load(config_path);
    const NetworkGraph graph = build_graph(loaded.config);
    const Equilibrium eq = compute_equilibrium(graph, loaded.config.system.omega0);
    const SynchronizationModel model = build_synchronization_model(graph, eq);

    std::vector<std::string> notes;
    const InertiaDynamics dynamics = shared_inertia_dynamics(loaded.config, &notes);

    CriterionOptions options;
    options.grid = loaded.config.system.zeta_grid;
    options.threads = env_threads();
    options.record_sweeps = csv;
    StabilityReport report = evaluate_criterion(model, dynamics, options);
    report.notes.insert(report.notes.begin(), notes.begin(), notes.end());

    const ReportContext ctx{loaded.hash, loaded.config.system.omega0};
    write_output(report_json(report, ctx), out);
    if (csv) {
        const std::string base = strip_json_suffix(out);
        write_output(sweeps_csv(report, ctx), base + ".sweeps.csv");
        write_output(forbidden_csv(report, ctx), base + ".forbidden.csv");
    }
    return report.verdict == Verdict::CertifiedStable ? 0 : 2;
}

int cmd_simulate(const std::string& config_path, const std::string& out, bool csv,
                 const std::optional<Real>& dt_flag, const std::optional<Real>& duration_flag,
                 const std::string& gain_mode_flag) {
    const LoadedConfig loaded = load(config_path);
    const NetworkGraph graph = build_graph(loaded.config);
    const Equilibrium eq = compute_equilibrium(graph, loaded.config.system.omega0);

    RunOptions options;
    options.dt = dt_flag.value_or(loaded.config.system.dt);
    options.dt_out = loaded.config.system.dt_out;
    options.duration = duration_flag.value_or(loaded.config.system.duration);
    options.config_hash = loaded.hash;
    if (gain_mode_flag == "dynamic") {
        options.gain_mode = GainMode::Dynamic;
    } else if (gain_mode_flag == "quasistatic") {
        options.gain_mode = GainMode::QuasiStatic;
    } else {
        // default: the full loop when factored channels allow it
        options.gain_mode = graph.factored() ? GainMode::Dynamic : GainMode::QuasiStatic;
    }

    const std::vector<Perturbation> perturbations = resolve_perturbations(loaded.config, graph);
    const SimulationTrace trace = run(graph, eq, perturbations, options);
    write_output(csv ? trace_csv(trace) : trace_json(trace), out);
    if (trace.diverged) {
        std::cerr << "warning: simulation diverged at t = " << *trace.divergence_time
                  << " s; trace truncated\n";
        return 3;
    }
    return 0;
}

int cmd_modes(const std::string& config_path, const std::string& out) {
    const LoadedConfig loaded = load(config_path);
    const NetworkGraph graph = build_graph(loaded.config);
    const Equilibrium eq = compute_equilibrium(graph, loaded.config.system.omega0);
    const SynchronizationModel model = build_synchronization_model(graph, eq);
    const ReportContext ctx{loaded.hash, loaded.config.system.omega0};
    write_output(modes_json(model, ctx), out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"syncscope: synchronization stability analysis for "
                 "power-communication isomorphic system models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    bool csv = false;
    std::optional<Real> dt_flag;
    std::optional<Real> duration_flag;
    std::string gain_mode_flag;

    CLI::App* analyze = app.add_subcommand(
        "analyze", "Evaluate the small-gain synchronization criterion and emit a report");
    analyze->add_option("config", config_path, "JSON configuration file")->required();
    analyze->add_option("--out", out_path, "write the JSON report here instead of stdout");
    analyze->add_flag("--csv", csv,
                      "also write <out>.sweeps.csv and <out>.forbidden.csv plot data");

    CLI::App* simulate =
        app.add_subcommand("simulate", "Integrate the nonlinear loop and emit the trace");
    simulate->add_option("config", config_path, "JSON configuration file")->required();
    simulate->add_option("--out", out_path, "write the trace here instead of stdout");
    simulate->add_flag("--csv", csv, "emit the trace as CSV instead of JSON");
    simulate->add_option("--dt", dt_flag, "integrator step in seconds (overrides the config)")
        ->check(CLI::PositiveNumber);
    simulate
        ->add_option("--duration", duration_flag, "horizon in seconds (overrides the config)")
        ->check(CLI::PositiveNumber);
    simulate
        ->add_option("--gain-mode", gain_mode_flag,
                     "channel gain handling (default: dynamic when channels are factored)")
        ->check(CLI::IsMember({"dynamic", "quasistatic"}));

    CLI::App* modes =
        app.add_subcommand("modes", "Emit the modal decomposition of the linearized model");
    modes->add_option("config", config_path, "JSON configuration file")->required();
    modes->add_option("--out", out_path, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(config_path, out_path, csv);
        if (simulate->parsed()) {
            return cmd_simulate(config_path, out_path, csv, dt_flag, duration_flag,
                                gain_mode_flag);
        }
        return cmd_modes(config_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
