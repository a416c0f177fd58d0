#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "parobs/errors.hpp"
#include "parobs/oracle.hpp"
#include "parobs/penalty.hpp"
#include "parobs/solver.hpp"
#include "support.hpp"

using namespace parobs;

namespace {

SolveConfig exact_config(GridSpec grid, PenaltyFamily pf, const SpaceTimeFunction& u, bool validation_only) {
  SolveConfig c;
  c.grid = grid;
  c.penalty = pf;
  auto g = Grid(grid);
  c.initial = unmollified([u](const Point& x) { return u(x, 0.0); }, g, pf.eps);
  c.lateral_bc.kind = LateralBoundary::Kind::exact;
  c.lateral_bc.exact = u;
  c.validation_only = validation_only;
  c.M_bound = 100.0;
  return c;
}

double max_error(const SpaceTimeField& f, const SpaceTimeFunction& u) {
  const Grid& g = f.grid();
  double e = 0.0;
  for (int k = 0; k < g.levels(); ++k)
    for (std::size_t n = 0; n < g.node_count(); ++n)
      if (g.in_ball(n)) e = std::max(e, std::abs(f(k, n) - u(g.position(n), g.time(k))));
  return e;
}

SolveConfig hump_config(double tau, double eps, double horizon) {
  SolveConfig c;
  c.grid = GridSpec{1, 5.0, 0.02, tau, horizon, {1.0, 0.9, 0.8, 0.7, 0.1}};
  c.penalty = PenaltyFamily{2.0, 2.0, eps};
  const auto phi = initial_profile("hump", {1.25, 1.0, 2.5});
  c.initial = mollify_initial(phi, eps, Grid(c.grid));
  c.M_bound = 20.0;
  return c;
}

}  // namespace

TEST(Solver, StationaryProfileIsPreserved) {
  const GridSpec grid{1, 1.0, 0.02, 0.001, 0.02};
  const PenaltyFamily pf{2.0, 2.0, 2e-4};  // eps <= h^2
  const auto exact = ExactSolution::stationary(2.0, 2.0).eval;
  auto rep = solve(exact_config(grid, pf, exact, false));
  EXPECT_LE(max_error(rep.field, exact), 10 * 1e-10 + grid.h * grid.h);
}

TEST(Solver, CaloricQuadraticIsReproducedExactly) {
  // Backward Euler with the five-point Laplacian is exact on p(x) + q t.
  const GridSpec grid{2, 0.5, 0.05, 0.0025, 0.025};
  const auto p = standard_caloric();
  const SpaceTimeFunction u = [p](const Point& x, double t) { return p(x, t); };
  auto rep = solve(exact_config(grid, PenaltyFamily{1.0, 1.0, 1e-3}, u, true));
  EXPECT_LE(max_error(rep.field, u), 1e-10);
}

TEST(Solver, HeatPolynomialErrorIsFirstOrderInTau) {
  const SpaceTimeFunction u = heat_polynomial4;
  std::vector<double> taus, errs;
  for (double tau : {0.004, 0.002, 0.001}) {
    const GridSpec grid{1, 1.0, 0.02, tau, 0.2};
    auto rep = solve(exact_config(grid, PenaltyFamily{1.0, 1.0, 1e-3}, u, true));
    taus.push_back(tau);
    errs.push_back(max_error(rep.field, u));
  }
  EXPECT_GT(errs[0], errs[1]);
  EXPECT_GT(errs[1], errs[2]);
  const double order = std::log(errs[0] / errs[2]) / std::log(taus[0] / taus[2]);
  EXPECT_GE(order, 0.9);
}

TEST(Solver, NonFiniteStateIsNumericError) {
  auto c = hump_config(0.001, 1e-3, 0.002);
  auto g = std::make_shared<const Grid>(c.grid);
  std::vector<double> state = c.initial.values;
  state[g->node_count() / 2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step(g, c, state, 1), NumericError);
}

TEST(Solver, NewtonFailureCarriesResidualTrace) {
  auto c = hump_config(0.1, 1e-4, 0.2);
  c.newton_max_iter = 1;
  try {
    solve(c);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_FALSE(e.trace().empty());
    EXPECT_GT(e.last_residual(), c.newton_tol);
  }
}

TEST(Solver, RunsAreBitwiseDeterministic) {
  auto c = hump_config(0.001, 1e-3, 0.02);
  auto a = solve(c);
  auto b = solve(c);
  ASSERT_EQ(a.field.values().size(), b.field.values().size());
  for (std::size_t i = 0; i < a.field.values().size(); ++i) ASSERT_EQ(a.field.values()[i], b.field.values()[i]);
  EXPECT_EQ(a.newton_iters, b.newton_iters);
}

TEST(Solver, HeatPartSatisfiesDiscreteMaximumPrinciple) {
  auto c = hump_config(0.001, 1e-3, 0.05);
  c.validation_only = true;
  auto rep = solve(c);
  double lo = 1e300, hi = -1e300;
  for (double v : c.initial.values) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : rep.field.values()) {
    EXPECT_GE(v, lo - 1e-12);
    EXPECT_LE(v, hi + 1e-12);
  }
}

TEST(Solver, InvalidConfigListsEveryViolation) {
  SolveConfig c;
  c.grid = GridSpec{1, 1.0, 0.3, -0.1, 0.1};
  c.penalty = PenaltyFamily{1.0, 1.0, 0.0};
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.violations().size(), 3u);
  }
}

TEST(EpsilonLimit, SingleEntryHasNoGaps) {
  auto c = hump_config(0.001, 1e-3, 0.01);
  const std::vector<double> ladder{1e-3};
  auto r = epsilon_limit(c, ladder, 0.0);
  EXPECT_TRUE(r.gaps.empty());
  EXPECT_EQ(r.reports.size(), 1u);
  EXPECT_TRUE(r.pass());
}

TEST(EpsilonLimit, GapsRespectBoundWithMeasuredDiscretization) {
  auto c = hump_config(0.001, 1e-3, 0.05);
  // Discretization constant measured independently on a closed-form heat solution.
  const GridSpec grid = c.grid;
  auto val = solve(exact_config(grid, c.penalty, heat_polynomial4, true));
  const double c_disc = max_error(val.field, heat_polynomial4);
  const std::vector<double> ladder{1e-2, 1e-3};
  auto r = epsilon_limit(c, ladder, c_disc);
  ASSERT_EQ(r.gaps.size(), 1u);
  EXPECT_LE(r.gaps[0], 1e-2 + 1e-3 + c_disc);
  EXPECT_TRUE(r.pass());
}

TEST(EpsilonLimit, ParallelLadderMatchesSequential) {
  auto c = hump_config(0.001, 1e-3, 0.02);
  const std::vector<double> ladder{1e-2, 1e-3};
  auto a = epsilon_limit(c, ladder, 0.0, 1);
  auto b = epsilon_limit(c, ladder, 0.0, 2);
  ASSERT_EQ(a.gaps.size(), b.gaps.size());
  for (std::size_t j = 0; j < a.gaps.size(); ++j) EXPECT_EQ(a.gaps[j], b.gaps[j]);
  for (std::size_t j = 0; j < a.reports.size(); ++j)
    for (std::size_t i = 0; i < a.reports[j].field.values().size(); ++i)
      ASSERT_EQ(a.reports[j].field.values()[i], b.reports[j].field.values()[i]);
}

TEST(InitialTimeDerivative, VanishesForCaloricData) {
  const GridSpec grid{1, 1.0, 0.02, 0.001, 0.01};
  const auto p = standard_caloric();
  const SpaceTimeFunction u = [p](const Point& x, double t) { return p(x, t); };
  auto cfg = exact_config(grid, PenaltyFamily{1.0, 1.0, 1e-3}, u, true);
  auto rep = solve(cfg);
  EXPECT_LE(initial_time_derivative_check(rep.field, cfg), 1e-6);
}

TEST(InitialTimeDerivative, DecreasesUnderTauRefinement) {
  // Default hump data. The worst node sits inside the eps band of f_eps,
  // where tau Lip(f_eps) is large, so halving tau only approaches the
  // first-order ratio 2 once tau is well below eps.
  std::vector<double> defects;
  for (double tau : {1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5, 3.125e-5}) {
    auto c = hump_config(tau, 1e-3, 0.01);
    auto rep = solve(c);
    defects.push_back(initial_time_derivative_check(rep.field, c));
  }
  for (std::size_t j = 1; j < defects.size(); ++j) EXPECT_LT(defects[j], defects[j - 1]) << "j=" << j;
  EXPECT_GE(defects[defects.size() - 2] / defects.back(), 1.8);
}
