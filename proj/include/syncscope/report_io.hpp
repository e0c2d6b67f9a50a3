#pragma once

// Deterministic report and trace serialization.  JSON reports have a fixed
// field order and every float is printed with 17 significant digits, so a
// given analysis produces byte-identical output on every run.  CSV exports
// carry their metadata in '#'-prefixed header lines.

#include <string>

#include "syncscope/network.hpp"
#include "syncscope/simulator.hpp"
#include "syncscope/stability.hpp"

namespace syncscope {

/// Provenance fields stamped into every report.
struct ReportContext {
    std::string config_hash;
    Real omega0 = default_omega0;
};

/// Stability verdict report (the `analyze` command output).
std::string report_json(const StabilityReport& report, const ReportContext& ctx);

/// Modal report (the `modes` command output): eigenvalues, participation
/// magnitudes, the modal frequency-coupling matrix, and the residual
/// max|K_H Phi - Phi diag(xi)|.
std::string modes_json(const SynchronizationModel& model, const ReportContext& ctx);

/// Full trace as JSON.
std::string trace_json(const SimulationTrace& trace);

/// Trace as CSV: metadata comment lines, one header row, one row per sample.
std::string trace_csv(const SimulationTrace& trace);

/// Per-mode boundary sweeps (series, omega, magnitude) as CSV; requires the
/// report to have been produced with sweep recording enabled.
std::string sweeps_csv(const StabilityReport& report, const ReportContext& ctx);

/// Forbidden-region samples (omega, re, im) as CSV: the boundary trace of
/// -s/T(s), the region the mode stiffnesses xi must avoid.
std::string forbidden_csv(const StabilityReport& report, const ReportContext& ctx);

} // namespace syncscope
