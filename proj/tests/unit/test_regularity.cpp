#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "parobs/errors.hpp"
#include "parobs/kernel.hpp"
#include "parobs/oracle.hpp"
#include "parobs/regularity.hpp"
#include "support.hpp"

using namespace parobs;
using parobs::test::make_grid;

namespace {

// int_tau^{R^2} int zeta_R(x)^2 G(x, s) dx ds in 1D, by Simpson in s and a
// substitution x = 2 sqrt(s) y that turns G into a unit Gaussian in y.
double cutoff_kernel_mass(double R, double tau) {
  const CutoffProfile c{1, {0.0, 0.0}, R};
  const int ns = 400, ny = 2001;
  const double ylim = 7.0, dy = 2 * ylim / (ny - 1);
  auto inner = [&](double s) {
    double acc = 0.0;
    for (int j = 0; j < ny; ++j) {
      const double y = -ylim + j * dy;
      const double z = cutoff_eval(c, {2 * std::sqrt(s) * y, 0.0}).value;
      const double w = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
      acc += w * z * z * std::exp(-y * y) / std::sqrt(std::numbers::pi);
    }
    return acc * dy;
  };
  const double a = tau, b = R * R, ds = (b - a) / ns;
  double acc = inner(a) + inner(b);
  for (int i = 1; i < ns; ++i) acc += (i % 2 ? 4.0 : 2.0) * inner(a + i * ds);
  return acc * ds / 3.0;
}

}  // namespace

TEST(Directions, OrthogonalToTheGradient) {
  auto g = make_grid(2, 1.0, 0.05, 0.0025, 0.04);
  auto u = sample_field(g, [](const Point& x, double) { return 0.6 * x[0] + 0.8 * x[1]; }, "lin");
  auto d = choose_directions(u, ProbePoint{{0.0, 0.0}, 0.04}, 0.15);
  ASSERT_TRUE(d.has_normal);
  EXPECT_NEAR(d.nu[0], 0.6, 1e-12);
  EXPECT_NEAR(d.nu[1], 0.8, 1e-12);
  ASSERT_EQ(d.e.size(), 1u);
  EXPECT_NEAR(d.e[0][0], -0.8, 1e-12);
  EXPECT_NEAR(d.e[0][1], 0.6, 1e-12);
  EXPECT_NEAR(d.gradient_norm, 1.0, 1e-12);
}

TEST(Directions, DegenerateGradientAllowsEveryAxis) {
  auto g = make_grid(2, 1.0, 0.05, 0.0025, 0.04);
  auto u = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  auto d = choose_directions(u, ProbePoint{{0.0, 0.0}, 0.04}, 0.15);
  EXPECT_FALSE(d.has_normal);
  EXPECT_EQ(d.e.size(), 2u);
}

TEST(Directions, OneDimensionalNonDegenerateUsesEquation) {
  auto g = make_grid(1, 1.0, 0.05, 0.0025, 0.04);
  auto u = sample_field(g, [](const Point& x, double) { return x[0]; }, "lin");
  auto d = choose_directions(u, ProbePoint{{0.0, 0.0}, 0.04}, 0.15);
  EXPECT_TRUE(d.equation_route);
  EXPECT_TRUE(d.e.empty());
}

TEST(GradientGap, VanishesAtTimeZeroAndForStationaryData) {
  auto g = make_grid(1, 2.0, 0.02, 0.001, 0.04);
  auto u = sample_field(g, [](const Point& x, double) { return stationary_two_phase(x, 2.0, 2.0); }, "s");
  const auto phi = u.level(0);
  auto gap = gradient_gap(u, phi, ProbePoint{{0.0, 0.0}, 0.04});
  EXPECT_EQ(gap.initial_gap, 0.0);
  EXPECT_EQ(gap.sup_gap, 0.0);
  EXPECT_EQ(gap.energy_gap, 0.0);

  auto cal = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  auto gap2 = gradient_gap(cal, cal.level(0), ProbePoint{{0.0, 0.0}, 0.04});
  EXPECT_EQ(gap2.initial_gap, 0.0);
  EXPECT_NEAR(gap2.sup_gap, 0.0, 1e-12);  // Du does not depend on t
}

TEST(WeightedHessianEnergy, CaloricQuadraticMatchesKernelMass) {
  auto g = make_grid(1, 2.0, 0.01, 0.0001, 0.04);
  auto u = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  const ProbePoint z0{{0.0, 0.0}, 0.04};
  const double expected = 4.0 * cutoff_kernel_mass(z0.R(), g->tau());
  EXPECT_NEAR(weighted_hessian_energy(u, z0), expected, 0.01 * expected);

  auto lin = sample_field(g, [](const Point& x, double t) { return 3 * x[0] + t; }, "lin");
  EXPECT_NEAR(weighted_hessian_energy(lin, z0), 0.0, 1e-12);
}

TEST(WeightedHessianEnergy, ScalesLikeRSquared) {
  auto g = make_grid(1, 4.0, 0.02, 0.0004, 0.16);
  auto u = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  const double a = weighted_hessian_energy(u, ProbePoint{{0.0, 0.0}, 0.04});
  const double b = weighted_hessian_energy(u, ProbePoint{{0.0, 0.0}, 0.16});
  EXPECT_LE(b / a, 4.5);
  EXPECT_GE(b / a, 4.0 / 1.125);
}

TEST(SplitNorms, OneSignedDerivative) {
  auto g = make_grid(1, 2.0, 0.02, 0.0004, 0.04);
  auto u = sample_field(g, [](const Point& x, double) { return 1.5 * x[0]; }, "lin");
  const ProbePoint z0{{0.0, 0.0}, 0.04};
  auto s = split_norms(u, z0, {1.0, 0.0});
  EXPECT_EQ(s.minus, 0.0);
  // |D_e u|^2 = 2.25 over B_2R x [0, t0].
  const double R = z0.R();
  EXPECT_NEAR(s.plus, 2.25 * 4 * R * z0.t0, 2.25 * 4 * R * z0.t0 * g->h() / R);
}

TEST(HessianChain, AssembledBoundTracksStencilHessian) {
  // Degenerate point of a caloric field: the Phi route with the frozen
  // constant.
  GridSpec spec{1, 5.0, 0.02, 0.001, 0.09, {1.0, 0.9, 0.8, 0.7, 0.1}};
  auto g = std::make_shared<const Grid>(spec);
  auto u = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  ChainOptions opts;
  opts.C = calibrate_chain_constant(spec, 0.04);
  opts.thresholds = default_thresholds(*g);
  opts.penalty = PenaltyFamily{0.0, 0.0, 1e-3};
  auto chain = hessian_bound_chain(u, ProbePoint{{0.0, 0.0}, 0.04}, opts);
  EXPECT_NEAR(chain.assembled, chain.direct, 0.1 * chain.direct);

  // Non-degenerate point in 1D: the equation route gives |d_t u + f(u)|.
  auto chain2 = hessian_bound_chain(u, ProbePoint{{0.5, 0.0}, 0.04}, opts);
  EXPECT_TRUE(chain2.directions.equation_route);
  EXPECT_NEAR(chain2.assembled, 2.0, 1e-9);
  EXPECT_NEAR(chain2.direct, 2.0, 1e-9);
}

TEST(HessianChain, ZeroValueAtProbeIsRejected) {
  auto g = make_grid(1, 2.0, 0.02, 0.001, 0.04);
  auto u = sample_field(g, [](const Point& x, double) { return x[0] * x[0]; }, "q");
  ChainOptions opts;
  opts.thresholds = default_thresholds(*g);
  EXPECT_THROW(hessian_bound_chain(u, ProbePoint{{0.0, 0.0}, 0.04}, opts), PreconditionError);
}

TEST(SupScan, CaloricQuadratic) {
  auto g = make_grid(1, 1.0, 0.02, 0.001, 0.02);
  auto u = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t + 1.0; }, "cal");
  auto d = decompose(classify(u, default_thresholds(*g)));
  auto s = theorem_sup_scan(u, 0.5, d);
  EXPECT_NEAR(s.hessian, 2.0, 1e-10);
  EXPECT_NEAR(s.time_derivative, 2.0, 1e-10);
  EXPECT_NEAR(sup_time_derivative(u, 0.5), 2.0, 1e-10);
}

TEST(Holder, TimeIndependentAndSqrtGradients) {
  auto g = make_grid(1, 1.0, 0.02, 0.001, 0.1);
  auto flat = sample_field(g, [](const Point& x, double) { return std::sin(x[0]); }, "flat");
  EXPECT_EQ(holder_half_check(flat, 0.5), 0.0);
  // Du = sqrt(t): the quotient is at most 1, with equality against t = 0.
  auto root = sample_field(g, [](const Point& x, double t) { return x[0] * std::sqrt(t); }, "root");
  EXPECT_NEAR(holder_half_check(root, 0.5), 1.0, 1e-10);
}

TEST(EquationConsistency, ExactSolutionsHaveSmallDefect) {
  auto g = make_grid(1, 1.0, 0.02, 0.001, 0.02);
  const PenaltyFamily pf{2.0, 2.0, 1e-3};
  auto st = sample_field(g, [](const Point& x, double) { return stationary_two_phase(x, 2.0, 2.0); }, "s");
  EXPECT_LE(equation_consistency(st, pf, 1e-3, 0.5), 1e-10);
  auto cal = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  EXPECT_LE(equation_consistency(cal, PenaltyFamily{0.0, 0.0, 1e-3}, 0.0, 0.5), 1e-10);
}

TEST(WeakPairing, CaloricFieldPairsToZero) {
  auto g = make_grid(1, 2.0, 0.02, 0.001, 0.3);
  auto cal = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, "cal");
  for (const TestBump& psi : bump_battery(*g)) {
    EXPECT_GT(psi.c2_norm(1), 0.0);
    EXPECT_NEAR(weak_pairing(cal, psi), 0.0, 1e-9);
  }
}

TEST(WeakPairing, SubcaloricPartIsNonNegative) {
  // (D_e u)+ of a caloric u is subcaloric.
  auto g = make_grid(1, 2.0, 0.02, 0.001, 0.3);
  auto u = sample_field(g, [](const Point& x, double t) { return x[0] * x[0] * x[0] / 3 + 2 * x[0] * t; }, "u");
  auto plus = directional_part(u, {1.0, 0.0}, 1);
  for (const TestBump& psi : bump_battery(*g))
    EXPECT_GE(weak_pairing(plus, psi), -(g->h() + g->tau()) * psi.c2_norm(1));
}

TEST(LogLog, ExactForPowerLaws) {
  const std::vector<double> x{0.1, 0.2, 0.4, 0.8};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 4.5));
  EXPECT_NEAR(loglog_slope(x, y), 4.5, 1e-12);
  const std::vector<double> bad{1.0, 0.0, 2.0, 3.0};
  EXPECT_THROW(loglog_slope(x, bad), DomainError);
}
