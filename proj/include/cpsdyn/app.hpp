// SPDX-License-Identifier: Apache-2.0
//
// Batch commands behind the command-line front end: ensemble runs, parameter
// sweeps, oracle runs, marginal grids and the self-test suite.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cpsdyn/config.hpp"

namespace cpsdyn {

/// Receives progress and warning lines.
using LogSink = std::function<void(const std::string&)>;

std::string version_string();
/// Library versions, one "name: version" per line.
std::string version_report();

/// Ensemble described by `cfg`, with the time column in cfg.time_unit.
EnsembleSeries run_series(const RunConfig& cfg, EnsembleDiagnostics* diagnostics = nullptr);

/// Oracle described by `cfg`, with the time column in cfg.time_unit.
EnsembleSeries oracle_series(const RunConfig& cfg);

/// Writes series.csv and meta.txt to the output directory. Failed
/// trajectories above 1% warn and above 10% raise after the files are written.
void cmd_run(const RunConfig& cfg, const LogSink& log);

/// One subdirectory per swept value plus summary.csv with the final value
/// and error of every column.
void cmd_sweep(const RunConfig& cfg, const LogSink& log);

/// Writes oracle.csv and meta.txt.
void cmd_oracle(const RunConfig& cfg, const LogSink& log);

/// Writes one grid CSV per kernel entry (or per hybrid block).
void cmd_marginals(const RunConfig& cfg, const LogSink& log);

struct SelftestCheck {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct SelftestOptions {
  /// Replaces the self-inverse gamma in the kernel checks (negative control).
  std::optional<double> gamma_override;
  std::uint64_t seed = 1;
};

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options);

/// One line per check: PASS/FAIL, name, measured and tolerated value.
std::string format_selftest(const std::vector<SelftestCheck>& checks);

}  // namespace cpsdyn
