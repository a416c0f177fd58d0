#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "parobs/config.hpp"
#include "parobs/errors.hpp"

using namespace parobs;

namespace {

ExperimentConfig parse(const std::string& text, ExperimentKind kind = ExperimentKind::solve) {
  std::istringstream is(text);
  return parse_config(is, kind);
}

std::string joined(const ConfigError& e) {
  std::string s;
  for (const auto& v : e.violations()) s += v + "\n";
  return s;
}

}  // namespace

TEST(Config, EmptyInputGivesDefaults) {
  auto cfg = parse("# nothing\n\n");
  ExperimentConfig d;
  d.field_format = "csv";  // solve writes fields unless told otherwise
  EXPECT_EQ(resolved_config_text(cfg), resolved_config_text(d));
  EXPECT_EQ(cfg.grid.h, 0.02);
}

TEST(Config, OverridesAndLists) {
  auto cfg = parse("grid.dim = 2\ngrid.radius = 2\nprobe.x0 = 0 0; 0.1 0.05\nprobe.t0 = 0.04\nladder.eps = 0.01, 0.001\n",
                   ExperimentKind::monotonicity);
  EXPECT_EQ(cfg.grid.dim, 2);
  ASSERT_EQ(cfg.probe_x0.size(), 2u);
  EXPECT_EQ(cfg.probe_x0[1][1], 0.05);
  EXPECT_EQ(cfg.ladder_eps.size(), 2u);
  EXPECT_EQ(probe_points(cfg).size(), 2u);
}

TEST(Config, DuplicateAndUnknownKeysAreAllReported) {
  try {
    parse("grid.h = 0.02\ngrid.h = 0.01\ngrid.spacing = 3\nno equals sign\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto s = joined(e);
    EXPECT_EQ(e.violations().size(), 3u) << s;
    EXPECT_NE(s.find("line 2"), std::string::npos);
    EXPECT_NE(s.find("grid.spacing"), std::string::npos);
    EXPECT_NE(s.find("line 4"), std::string::npos);
  }
}

TEST(Config, MalformedValuesAreRejected) {
  EXPECT_THROW(parse("grid.h = abc\n"), ConfigError);
  EXPECT_THROW(parse("initial.mollify = maybe\n"), ConfigError);
  EXPECT_THROW(parse("boundary.kind = sideways\n"), ConfigError);
}

TEST(Config, ProbeGeometryViolationsNameThePoint) {
  try {
    parse("probe.x0 = 0; 4\nprobe.t0 = 0.04, 0.05\n", ExperimentKind::regularity_sweep);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto s = joined(e);
    EXPECT_NE(s.find("B_6R"), std::string::npos) << s;
    EXPECT_NE(s.find("x0 = 4"), std::string::npos) << s;
  }
  // Probe geometry is irrelevant for a plain solve.
  EXPECT_NO_THROW(parse("probe.x0 = 4\n", ExperimentKind::solve));
}

TEST(Config, GridViolationsSurfaceThroughValidate) {
  try {
    parse("grid.h = 0.3\ngrid.radius = 1\npenalty.eps = 0\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.violations().size(), 2u) << joined(e);
  }
}

TEST(Config, ResolvedTextRoundTrips) {
  auto cfg = parse("grid.dim = 2\ngrid.radius = 2\nmonotonicity.N = 0.5\nconvergence.mode = tau,h\n",
                   ExperimentKind::convergence);
  const auto text = resolved_config_text(cfg);
  std::string body;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("experiment.kind", 0) != 0) body += line + "\n";
  auto again = parse(body, ExperimentKind::convergence);
  EXPECT_EQ(resolved_config_text(again), text);
  EXPECT_EQ(convergence_modes(again), (std::vector<std::string>{"tau", "h"}));
  EXPECT_EQ(again.resolved_N(), 0.5);
}

TEST(Config, AutoConstantsResolveToFrozenDefaults) {
  auto cfg = parse("grid.dim = 2\ngrid.radius = 2\n");
  EXPECT_EQ(cfg.resolved_N(), default_remainder_constant(2));
  EXPECT_EQ(cfg.resolved_chain_C(), default_chain_constant(2));
}

TEST(Config, CommandNames) {
  EXPECT_EQ(kind_from_command("probe"), ExperimentKind::regularity_sweep);
  EXPECT_EQ(kind_from_command("ladder"), ExperimentKind::epsilon_ladder);
  EXPECT_THROW(kind_from_command("bogus"), ConfigError);
}
