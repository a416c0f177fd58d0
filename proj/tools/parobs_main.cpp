#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "parobs/config.hpp"
#include "parobs/errors.hpp"
#include "parobs/experiment.hpp"

namespace {

int run_command(const std::string& command, const std::string& config_path, const std::string& out_dir, int workers) {
  const parobs::ExperimentKind kind = parobs::kind_from_command(command);
  parobs::ExperimentConfig cfg;
  try {
    if (config_path.empty()) {
      std::istringstream defaults;
      cfg = parobs::parse_config(defaults, kind);
    } else {
      cfg = parobs::parse_config_file(config_path, kind);
    }
  } catch (const parobs::ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    parobs::write_config_error_report(out_dir, kind, e);
    return 2;
  }

  const parobs::RunResult res = parobs::run_experiment(cfg, {out_dir, workers});
  for (const auto& c : res.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << "[" << c.statement << "] " << c.name << ": " << c.value
              << " (bound " << c.bound << ")\n";
  if (res.error) {
    std::cerr << res.error->type << " error: " << res.error->message << "\n";
    if (!res.error->residual_trace.empty()) {
      std::cerr << "residual trace:";
      for (double r : res.error->residual_trace) std::cerr << " " << r;
      std::cerr << "\n";
    }
  }
  std::cout << parobs::to_string(cfg.kind) << ": " << (res.error ? "ERROR" : res.pass() ? "PASS" : "FAIL")
            << " (report: " << (std::filesystem::path(out_dir) / "report.json").string() << ")\n";
  return res.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase parabolic obstacle problem: penalized solver and regularity probes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int workers = 1;
  bool seedless = false;  // every run is deterministic; kept for interface stability
  app.add_option("--config", config_path, "Config file of `key = value` lines")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--workers", workers, "Concurrent solves or scans")->check(CLI::PositiveNumber);
  app.add_flag("--seedless", seedless, "Reserved; runs have no random state");

  for (const char* name : {"solve", "ladder", "monotonicity", "probe", "convergence", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
  }
  app.get_subcommand("solve")->description("Solve the penalized problem once");
  app.get_subcommand("ladder")->description("Solve along a decreasing eps ladder and compare");
  app.get_subcommand("monotonicity")->description("Scan the cut-off functional over dyadic radii");
  app.get_subcommand("probe")->description("Probe the regularity estimates across refinements");
  app.get_subcommand("convergence")->description("Convergence study against a closed-form solution");
  app.get_subcommand("validate")->description("Kernel, cut-off and scheme self-checks");

  CLI11_PARSE(app, argc, argv);
  try {
    return run_command(app.get_subcommands().front()->get_name(), config_path, out_dir, workers);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
