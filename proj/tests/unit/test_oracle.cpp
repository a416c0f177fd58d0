#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "parobs/config.hpp"
#include "parobs/errors.hpp"
#include "parobs/oracle.hpp"
#include "parobs/solver.hpp"
#include "support.hpp"

using namespace parobs;
using parobs::test::make_grid;

namespace {

SolveConfig exact_config(GridSpec grid, PenaltyFamily pf, const SpaceTimeFunction& u, bool validation_only) {
  SolveConfig c;
  c.grid = grid;
  c.penalty = pf;
  c.initial = unmollified([u](const Point& x) { return u(x, 0.0); }, Grid(grid), pf.eps);
  c.lateral_bc.kind = LateralBoundary::Kind::exact;
  c.lateral_bc.exact = u;
  c.validation_only = validation_only;
  c.M_bound = 100.0;
  return c;
}

}  // namespace

TEST(ExactSolutions, StationaryProfile) {
  EXPECT_EQ(stationary_two_phase({1.0, 0.0}, 2.0, 2.0), 1.0);
  EXPECT_EQ(stationary_two_phase({-1.0, 0.0}, 2.0, 2.0), -1.0);
  EXPECT_EQ(stationary_two_phase({0.0, 0.0}, 2.0, 2.0), 0.0);
  EXPECT_EQ(stationary_two_phase({-2.0, 0.0}, 2.0, 4.0), -8.0);
}

TEST(ExactSolutions, CaloricPolynomialValidation) {
  const auto p = standard_caloric();
  EXPECT_EQ(p({1.0, 0.0}, 0.5), 2.0);
  EXPECT_NO_THROW(p.validate());
  CaloricPolynomial bad;
  bad.A = {{{1.0, 0.0}, {0.0, 1.0}}};  // x1^2 + x2^2 needs q = 4
  bad.q = 3.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(ExactSolution::caloric(bad), ConfigError);
}

TEST(ExactSolutions, HeatPolynomialIsCaloric) {
  const double x = 0.3, t = 0.2, d = 1e-4;
  auto u = [](double x, double t) { return heat_polynomial4({x, 0.0}, t); };
  const double ut = (u(x, t + d) - u(x, t - d)) / (2 * d);
  const double uxx = (u(x + d, t) - 2 * u(x, t) + u(x - d, t)) / (d * d);
  EXPECT_NEAR(ut, uxx, 1e-5);
}

TEST(InitialProfiles, NamedProfiles) {
  EXPECT_EQ(initial_profile("linear", {2.0})({0.5, 0.0}), 1.0);
  EXPECT_EQ(initial_profile("dead_zone", {0.5, 2.0})({0.25, 0.0}), 0.0);
  EXPECT_NEAR(initial_profile("dead_zone", {0.5, 2.0})({1.5, 0.0}), 1.0, 1e-15);
  EXPECT_NEAR(initial_profile("hump", {1.25, 1.0, 2.5})({0.0, 0.0}), 1.25, 1e-15);
  EXPECT_THROW(initial_profile("nope", {}), ConfigError);
}

TEST(FineGridReference, RefineMustBeTwoOrFour) {
  auto c = exact_config(GridSpec{1, 1.0, 0.05, 0.0025, 0.01}, PenaltyFamily{1, 1, 1e-3}, heat_polynomial4, true);
  EXPECT_THROW(fine_grid_reference(c, 3), ConfigError);
}

TEST(FineGridReference, ErrorShrinksWithRefinement) {
  const SpaceTimeFunction u = heat_polynomial4;
  auto c = exact_config(GridSpec{1, 1.0, 0.05, 0.0025, 0.05}, PenaltyFamily{1, 1, 1e-3}, u, true);
  auto base = solve(c).field;
  auto r2 = fine_grid_reference(c, 2);
  auto r4 = fine_grid_reference(c, 4);
  auto err = [&](const SpaceTimeField& f) {
    double e = 0;
    const Grid& g = f.grid();
    for (int k = 0; k < g.levels(); ++k)
      for (std::size_t n = 0; n < g.node_count(); ++n)
        if (g.in_ball(n)) e = std::max(e, std::abs(f(k, n) - u(g.position(n), g.time(k))));
    return e;
  };
  EXPECT_GT(err(base), err(r2));
  EXPECT_GT(err(r2), err(r4));
  auto again = fine_grid_reference(c, 2);
  for (std::size_t i = 0; i < r2.values().size(); ++i) ASSERT_EQ(r2.values()[i], again.values()[i]);
}

TEST(ConvergenceStudy, NeedsThreeLevels) {
  auto c = exact_config(GridSpec{1, 1.0, 0.05, 0.0025, 0.01}, PenaltyFamily{1, 1, 1e-3}, heat_polynomial4, true);
  EXPECT_THROW(convergence_study(c, 2, heat_polynomial4), ConfigError);
}

TEST(ConvergenceStudy, HeatPolynomialOrders) {
  auto c = exact_config(GridSpec{1, 1.0, 0.05, 0.01, 0.2}, PenaltyFamily{1, 1, 1e-3}, heat_polynomial4, true);
  auto tau = convergence_study(c, 3, heat_polynomial4, StudyOptions{"tau"});
  EXPECT_TRUE(tau.monotone);
  EXPECT_GE(tau.fitted_order, 0.9);
  auto par = convergence_study(c, 3, heat_polynomial4, StudyOptions{"parabolic"});
  EXPECT_GE(par.fitted_order, 1.8);
}

TEST(ConvergenceStudy, StationaryProfileAwayFromTheKink) {
  const auto exact = ExactSolution::stationary(2.0, 2.0).eval;
  auto c = exact_config(GridSpec{1, 1.0, 0.04, 0.001, 0.05}, PenaltyFamily{2, 2, 4 * 0.04 * 0.04}, exact, false);
  StudyOptions o;
  o.mode = "h";
  o.scale_eps_with_h2 = true;
  o.exclude_x1 = {0.0};
  o.exclude_cells = 1.0;
  auto s = convergence_study(c, 3, exact, o);
  EXPECT_GE(s.fitted_order, 1.5);
}

TEST(AnalyticEnergy, LinearFieldGivesWindowLength) {
  for (int dim : {1, 2}) {
    const double r = 0.3;
    const double I = analytic_energy(dim, [](const Point&, double) { return Vec{1.0, 0.0}; }, ProbePoint{{0.1, 0.0}, 0.09}, r);
    EXPECT_NEAR(I, r * r, 1e-8);
  }
}

TEST(Calibration, FrozenConstantsMatchRecomputation) {
  // The frozen remainder constants are the calibrated values rounded up.
  for (int dim : {1, 2}) {
    const double N = calibrate_remainder_constant(dim);
    EXPECT_GE(default_remainder_constant(dim), N);
    EXPECT_LE(default_remainder_constant(dim), N + 0.01 * N + 1e-12);
  }
  const ExperimentConfig defaults;
  const double C1 = calibrate_chain_constant(defaults.grid, 0.04);
  EXPECT_NEAR(default_chain_constant(1), C1, 0.01 * C1);
}

TEST(ContentHash, Fnv1aVectors) {
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(content_hash("foobar"), "85944171f73967e8");
}

TEST(ReferenceCache, StoresAndReloads) {
  const auto dir = parobs::test::scratch_dir();
  auto c = exact_config(GridSpec{1, 1.0, 0.05, 0.0025, 0.01}, PenaltyFamily{1, 1, 1e-3}, heat_polynomial4, true);
  ReferenceCache cache(dir);
  auto first = cache.reference(c, 2);
  EXPECT_FALSE(std::filesystem::is_empty(dir));
  auto second = cache.reference(c, 2);
  for (std::size_t i = 0; i < first.values().size(); ++i) ASSERT_EQ(first.values()[i], second.values()[i]);
  auto g = std::make_shared<const Grid>(c.grid);
  EXPECT_FALSE(cache.load("missing", g).has_value());
  EXPECT_NE(config_fingerprint(c), "");
}
