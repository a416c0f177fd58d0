#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parobs/config.hpp"
#include "parobs/errors.hpp"

namespace parobs {

/// One PASS/FAIL verdict. `statement` names the estimate being checked; the
/// acceptance harness groups verdicts by it.
struct Check {
  std::string name;
  std::string statement;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct RunOptions {
  std::filesystem::path out_dir = "out";
  int workers = 1;
};

struct RunError {
  std::string type;  // config | solver | numeric | geometry | precondition | certification | domain | internal
  std::string message;
  double last_residual = 0.0;
  std::vector<double> residual_trace;
};

struct RunResult {
  ExperimentKind kind = ExperimentKind::solve;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> files;  // relative to out_dir, in write order
  std::optional<RunError> error;

  bool pass() const;
  // 0 when every check passes, 1 on a failed check, 2 on an error.
  int exit_code() const;
  // Checks whose statement tag equals `statement`.
  std::vector<Check> checks_for(const std::string& statement) const;
};

// Runs the experiment named by cfg.kind and writes report.json, checks.csv
// and the kind's CSV tables into opts.out_dir. Errors raised while running
// are caught and recorded in the result and the report.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

// Writes a report.json for a config that failed to parse.
void write_config_error_report(const std::filesystem::path& out_dir, ExperimentKind kind, const ConfigError& e);

std::string error_type(const std::exception& e);

// Current schema of report.json.
inline constexpr int report_schema_version = 1;

}  // namespace parobs
