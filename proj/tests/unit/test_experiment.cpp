#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "parobs/config.hpp"
#include "parobs/experiment.hpp"
#include "support.hpp"

using namespace parobs;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, ExperimentKind kind) {
  std::istringstream is(text);
  return parse_config(is, kind);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST(Experiment, ValidateKindPassesAndWritesReport) {
  const auto dir = parobs::test::scratch_dir();
  auto r = run_experiment(parse("", ExperimentKind::validate), RunOptions{dir, 1});
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_FALSE(r.checks_for("heat-kernel-normalization").empty());
  const auto j = report(dir);
  EXPECT_EQ(j["schema_version"], report_schema_version);
  EXPECT_EQ(j["status"], "pass");
  EXPECT_EQ(j["kind"], "validate");
  EXPECT_TRUE(fs::exists(dir / "checks.csv"));
  for (const auto& f : r.files) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Experiment, SolveIsByteDeterministic) {
  const auto a = parobs::test::scratch_dir("_a");
  const auto b = parobs::test::scratch_dir("_b");
  const auto cfg = parse("grid.horizon = 0.02\n", ExperimentKind::solve);
  auto ra = run_experiment(cfg, RunOptions{a, 1});
  auto rb = run_experiment(cfg, RunOptions{b, 1});
  ASSERT_TRUE(ra.pass());
  ASSERT_EQ(ra.files, rb.files);
  for (const auto& f : ra.files)
    if (fs::path(f).extension() == ".csv") EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Experiment, NewtonFailureIsReportedWithTrace) {
  const auto dir = parobs::test::scratch_dir();
  auto cfg = parse("grid.tau = 0.1\ngrid.horizon = 0.2\npenalty.eps = 1e-4\nsolver.newton_max_iter = 1\n",
                   ExperimentKind::solve);
  auto r = run_experiment(cfg, RunOptions{dir, 1});
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(r.exit_code(), 2);
  EXPECT_EQ(r.error->type, "solver");
  EXPECT_FALSE(r.error->residual_trace.empty());
  const auto j = report(dir);
  EXPECT_EQ(j["status"], "error");
  EXPECT_FALSE(j["error"]["residual_trace"].empty());
}

TEST(Experiment, ConfigErrorReport) {
  const auto dir = parobs::test::scratch_dir();
  try {
    parse("grid.bogus = 1\n", ExperimentKind::solve);
    FAIL();
  } catch (const ConfigError& e) {
    write_config_error_report(dir, ExperimentKind::solve, e);
  }
  const auto j = report(dir);
  EXPECT_EQ(j["status"], "error");
  EXPECT_EQ(j["error"]["type"], "config");
}

TEST(Experiment, LadderWorkersDoNotChangeOutput) {
  const auto a = parobs::test::scratch_dir("_1");
  const auto b = parobs::test::scratch_dir("_2");
  const auto cfg = parse("grid.horizon = 0.02\nladder.eps = 0.01, 0.001\n", ExperimentKind::epsilon_ladder);
  auto ra = run_experiment(cfg, RunOptions{a, 1});
  auto rb = run_experiment(cfg, RunOptions{b, 2});
  ASSERT_FALSE(ra.error.has_value());
  for (const auto& f : ra.files)
    if (fs::path(f).extension() == ".csv") EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Experiment, OneSignedDataMonotonicityIsTrivial) {
  // Linear data keeps D_x u one-signed, so Phi vanishes at every radius.
  const auto dir = parobs::test::scratch_dir();
  auto cfg = parse("initial.profile = linear\ninitial.params = 1\ninitial.mollify = false\n"
                   "grid.horizon = 0.05\nprobe.t0 = 0.04\n",
                   ExperimentKind::monotonicity);
  auto r = run_experiment(cfg, RunOptions{dir, 1});
  ASSERT_FALSE(r.error.has_value()) << r.error->message;
  const auto checks = r.checks_for("almost-monotonicity");
  ASSERT_FALSE(checks.empty());
  for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name;
}
