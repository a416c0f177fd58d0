#pragma once

#include <span>
#include <vector>

#include "parobs/free_boundary.hpp"
#include "parobs/grid.hpp"
#include "parobs/kernel.hpp"
#include "parobs/penalty.hpp"

namespace parobs {

struct DirectionChoice {
  bool has_normal = false;
  Vec nu{0.0, 0.0};
  std::vector<Vec> e;           // orthonormal, each orthogonal to nu
  bool equation_route = false;  // n = 1 with a non-degenerate gradient
  double gradient_norm = 0.0;
};

// Uses the gradient at the node nearest x0 on level t0.
DirectionChoice choose_directions(const SpaceTimeField& u, const ProbePoint& z0, double theta_g);

struct GradientGap {
  double sup_gap = 0.0;      // over t in (0, t0], x in B_2R(x0)
  double initial_gap = 0.0;  // same sup on the t = 0 slice
  double energy_gap = 0.0;   // int_{B_3R} |D(u - phi)|^2 at t0
};

// phi is the initial slice the solve started from. Throws GeometryError
// unless B_3R(x0) lies in the probe shell.
GradientGap gradient_gap(const SpaceTimeField& u, std::span<const double> phi, const ProbePoint& z0);

// sup over B_2R(x0) of |D_e phi| (phi sampled on the grid).
double sup_directional_initial(const Grid& grid, std::span<const double> phi, const ProbePoint& z0, const Vec& e);

// int_0^{t0} int |D^2 u|^2 zeta_R^2 G(x - x0, t0 - t) dx dt with the same
// quadrature conventions as weighted_energy.
double weighted_hessian_energy(const SpaceTimeField& u, const ProbePoint& z0);

struct SplitNorms {
  double plus = 0.0;
  double minus = 0.0;
};
// ||(D_e u)+-||^2 over Q_2R(x0) clipped to t >= 0.
SplitNorms split_norms(const SpaceTimeField& u, const ProbePoint& z0, const Vec& e);

// Phi_e(r) for the cut-off zeta_R pair (D_e u)+, (D_e u)-.
std::vector<double> phi_profile(const SpaceTimeField& u, const ProbePoint& z0, const Vec& e,
                                const std::vector<double>& radii);

struct ChainOptions {
  double C = 0.25;  // constant in C |D(D_e u)|^4 <= lim Phi_e
  Thresholds thresholds;
  PenaltyFamily penalty;
};

struct HessianChain {
  DirectionChoice directions;
  std::vector<double> bounds;               // per e
  std::vector<std::vector<double>> phi_small;  // per e: Phi_e at 2h, 4h, 8h
  double d_nunu = 0.0;  // from the equation; 0 when there is no normal
  double assembled = 0.0;
  double direct = 0.0;  // Frobenius norm of the stencil Hessian at z0
};

HessianChain hessian_bound_chain(const SpaceTimeField& u, const ProbePoint& z0, const ChainOptions& opts);

struct SupScan {
  double hessian = 0.0;         // off-Gamma
  double hessian_near_gamma = 0.0;
  double time_derivative = 0.0;
  GridIndex hessian_at, time_derivative_at;
  std::size_t excluded = 0;
};

// Over box-interior ball nodes with |x| <= radius and every level
// (k = 0 included); Hessian maxima skip nodes within one cell of Gamma.
SupScan theorem_sup_scan(const SpaceTimeField& u, double radius, const FreeBoundaryDecomposition& d);

// sup |d_t u| over box-interior ball nodes with |x| <= radius, all levels.
double sup_time_derivative(const SpaceTimeField& u, double radius);

// Worst |Du(x,t) - Du(x,s)| / |t - s|^{1/2} over |x| <= radius and level
// lags 1, 2, 4, ...
double holder_half_check(const SpaceTimeField& u, double radius);

// max |Delta_h u - d_t u - f(u)| over k >= 1 interior nodes with |u| > theta_u
// and |x| <= radius.
double equation_consistency(const SpaceTimeField& u, const PenaltyFamily& pf, double theta_u, double radius);

/// Space-time test bump psi = b(|x - c| / a) b(|t - tc| / w), b(s) = (1 - s^2)^3.
struct TestBump {
  Point center{0.0, 0.0};
  double a = 1.0;
  double tc = 0.5;
  double w = 0.25;

  double value(const Point& x, double t, int dim) const;
  // sup of |psi| + |D psi| + |D^2 psi| + |d_t psi| over a dense sample.
  double c2_norm(int dim) const;
};

// Five bumps placed relative to the probe shell and the horizon.
std::vector<TestBump> bump_battery(const Grid& grid);

// sum_k sum_x v (Delta_h psi + forward d_t psi) h^n tau, the discrete adjoint
// of the scheme's heat operator.
double weak_pairing(const SpaceTimeField& v, const TestBump& psi);

double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace parobs
