// Runs every experiment kind on the shipped configs and prints one PASS/FAIL
// line per acceptance criterion. Exit status is nonzero if any line fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "parobs/config.hpp"
#include "parobs/experiment.hpp"

namespace fs = std::filesystem;
using namespace parobs;

namespace {

struct Run {
  std::string tag;
  ExperimentConfig cfg;
  RunResult result;
};

fs::path g_root;
std::vector<Run> g_runs;

ExperimentConfig from_text(const std::string& text, ExperimentKind kind) {
  std::istringstream is(text);
  return parse_config(is, kind);
}

ExperimentConfig from_file(const std::string& name, ExperimentKind kind) {
  return parse_config_file(std::string(PAROBS_CONFIG_DIR) + "/" + name, kind);
}

const RunResult& run(const std::string& tag, const ExperimentConfig& cfg) {
  std::fprintf(stderr, "running %s\n", tag.c_str());
  auto r = run_experiment(cfg, RunOptions{g_root / "a" / tag, 1});
  if (r.error) std::fprintf(stderr, "  %s error: %s\n", tag.c_str(), r.error->message.c_str());
  g_runs.push_back({tag, cfg, std::move(r)});
  return g_runs.back().result;
}

// Every check under `statement` passes, and there is at least one.
bool all_pass(const RunResult& r, const std::string& statement, std::string& note) {
  const auto checks = r.checks_for(statement);
  if (r.error) {
    note += " error(" + r.error->message + ")";
    return false;
  }
  int failed = 0;
  for (const auto& c : checks)
    if (!c.pass) {
      ++failed;
      note += " [" + c.name + ": " + std::to_string(c.value) + " vs " + std::to_string(c.bound) + "]";
    }
  if (checks.empty()) note += " no " + statement + " checks";
  return !checks.empty() && failed == 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int g_failed = 0;

void report(int id, const std::string& what, bool pass, const std::string& note) {
  std::printf("%s %2d %s%s%s\n", pass ? "PASS" : "FAIL", id, what.c_str(), note.empty() ? "" : " :", note.c_str());
  std::fflush(stdout);
  g_failed += pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  g_root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_runs");
  fs::remove_all(g_root);
  g_runs.reserve(16);

  const auto& val1 = run("validate_1d", from_text("", ExperimentKind::validate));
  const auto& val2 = run("validate_2d", from_text("grid.dim = 2\ngrid.radius = 1\ngrid.h = 0.05\ngrid.tau = 0.0025\n"
                                                  "grid.horizon = 0.05\ninitial.quadrature = 16\n",
                                                  ExperimentKind::validate));
  const auto& heat = run("convergence_heat", from_file("validation_heat.cfg", ExperimentKind::convergence));
  const auto& stat = run("convergence_stationary", from_file("stationary.cfg", ExperimentKind::convergence));
  const auto& ladder = run("ladder", from_file("default_1d.cfg", ExperimentKind::epsilon_ladder));
  const auto& sweep = run("probe", from_file("default_1d.cfg", ExperimentKind::regularity_sweep));
  const auto& mono = run("monotonicity_2d", from_file("monotonicity_2d.cfg", ExperimentKind::monotonicity));
  run("solve", from_file("default_1d.cfg", ExperimentKind::solve));

  {
    std::string note;
    bool ok = all_pass(val1, "heat-kernel-normalization", note) && all_pass(val2, "heat-kernel-normalization", note);
    ok = all_pass(val1, "heat-kernel-caloricity", note) && ok;
    ok = all_pass(val2, "heat-kernel-caloricity", note) && ok;
    report(1, "heat kernel has unit mass and is discretely caloric", ok, note);
  }
  {
    std::string note;
    bool ok = all_pass(val1, "cutoff-scaling", note);
    ok = all_pass(val2, "cutoff-scaling", note) && ok;
    report(2, "cut-off derivative constants are scale invariant", ok, note);
  }
  {
    std::string note;
    bool ok = all_pass(heat, "scheme-consistency", note);
    ok = all_pass(stat, "scheme-consistency", note) && ok;
    ok = all_pass(val1, "scheme-consistency", note) && ok;
    report(3, "scheme converges at the expected orders and preserves the stationary profile", ok, note);
  }
  {
    std::string note;
    bool ok = all_pass(ladder, "regularization-gap", note);
    report(4, "solutions for consecutive eps stay within eps_j + eps_j+1 + C_disc", ok, note);
  }
  {
    std::string note;
    bool ok = all_pass(ladder, "time-derivative-bound", note);
    ok = all_pass(sweep, "time-derivative-bound", note) && ok;
    report(5, "sup |d_t u| is stable across eps and refinements", ok, note);
  }
  {
    std::string note;
    bool ok = all_pass(sweep, "subcaloric-directional-parts", note);
    report(6, "directional parts pair non-negatively with test bumps", ok, note);
  }
  {
    std::string note;
    bool ok = all_pass(mono, "almost-monotonicity", note);
    std::set<std::string> points;
    for (const auto& c : mono.checks_for("almost-monotonicity"))
      if (c.pass && c.detail == "sign-changing") points.insert(c.name.substr(0, c.name.find(" t0=")));
    note += " sign-changing probe points " + std::to_string(points.size());
    report(7, "Phi(r) <= Phi(R) + remainder on sign-changing 2D probes", ok && points.size() >= 3, note);
  }
  {
    std::string note;
    report(8, "gradient gap to the initial data vanishes as t -> 0", all_pass(sweep, "gradient-near-initial-data", note),
           note);
  }
  {
    std::string note;
    bool ok = all_pass(sweep, "weighted-hessian-energy", note);
    ok = all_pass(sweep, "cutoff-functional-bound", note) && ok;
    report(9, "weighted Hessian energy is O(R^2) and Phi_e(R) stays bounded", ok, note);
  }
  {
    std::string note;
    report(10, "directional split norms scale like R^(n+4)", all_pass(sweep, "directional-norm-scaling", note), note);
  }
  {
    std::string note;
    bool ok = all_pass(sweep, "optimal-regularity", note);
    ok = all_pass(sweep, "hessian-chain", note) && ok;
    report(11, "D^2 u and d_t u stay bounded under refinement; Hessian chain matches", ok, note);
  }
  {
    std::string note;
    report(12, "gradient is half-Holder in time uniformly in the grid", all_pass(sweep, "gradient-half-holder", note),
           note);
  }
  {
    // Rerun everything into a second tree and compare every CSV byte.
    std::string note;
    bool ok = true;
    int compared = 0;
    for (const auto& r : g_runs) {
      std::fprintf(stderr, "rerunning %s\n", r.tag.c_str());
      const fs::path a = g_root / "a" / r.tag, b = g_root / "b" / r.tag;
      auto again = run_experiment(r.cfg, RunOptions{b, 2});
      if (again.files != r.result.files) {
        ok = false;
        note += " " + r.tag + ": file lists differ";
        continue;
      }
      for (const auto& f : r.result.files) {
        if (fs::path(f).extension() != ".csv") continue;
        ++compared;
        if (slurp(a / f) != slurp(b / f)) {
          ok = false;
          note += " " + r.tag + "/" + f;
        }
      }
    }
    note += " csv files compared " + std::to_string(compared);
    report(13, "reruns reproduce every CSV byte for byte", ok && compared > 0, note);
  }
  return g_failed == 0 ? 0 : 1;
}
