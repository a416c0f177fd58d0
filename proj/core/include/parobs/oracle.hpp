#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "parobs/grid.hpp"
#include "parobs/kernel.hpp"
#include "parobs/solver.hpp"

namespace parobs {

// u(x) = (l+/2) (x1)_+^2 - (l-/2) (x1)_-^2, a time-independent solution.
double stationary_two_phase(const Point& x, double lambda_plus, double lambda_minus);

/// p(x) + q t with p quadratic: p = c + b.x + sum_ij A_ij x_i x_j, A symmetric.
struct CaloricPolynomial {
  double c = 0.0;
  Vec b{0.0, 0.0};
  Mat A{{{0.0, 0.0}, {0.0, 0.0}}};
  double q = 0.0;

  // Throws ConfigError unless Delta p = 2 tr A equals q.
  void validate() const;
  double operator()(const Point& x, double t) const;
};

// x1^2 + 2t.
CaloricPolynomial standard_caloric();

// x1^4 + 12 x1^2 t + 12 t^2: caloric, but not reproduced exactly by the scheme.
double heat_polynomial4(const Point& x, double t);

struct ExactSolution {
  enum class Kind { stationary_two_phase, caloric_polynomial, custom_closed_form };
  Kind kind = Kind::custom_closed_form;
  std::string name;
  SpaceTimeFunction eval;

  static ExactSolution stationary(double lambda_plus, double lambda_minus);
  static ExactSolution caloric(const CaloricPolynomial& p);
  static ExactSolution custom(std::string name, SpaceTimeFunction f);
};

/// Named initial data. Parameters are positional:
///   hump       c, kappa, a       c - kappa|x|^2/2 inside |x| <= a, tangent cone outside
///   stationary l+, l-            the stationary two-phase profile
///   dead_zone  width, beta       0 on |x1| <= width, +-(beta/2)(|x1| - width)^2 outside
///   linear     slope             slope * x1
///   caloric    (none)            x1^2
///   heat4      (none)            x1^4
SpatialFunction initial_profile(const std::string& name, const std::vector<double>& params);
std::vector<std::string> profile_names();

// Solves at (h/refine, tau/refine^2, eps/10) and restricts to the coarse
// nodes and levels. refine must be 2 or 4.
SpaceTimeField fine_grid_reference(const SolveConfig& cfg, int refine);

struct ConvergenceLevel {
  double h = 0.0;
  double tau = 0.0;
  double eps = 0.0;
  double error = 0.0;
};

struct ConvergenceStudy {
  std::string mode;  // tau | h | parabolic
  std::vector<ConvergenceLevel> levels;
  double fitted_order = 0.0;
  bool monotone = true;
};

struct StudyOptions {
  std::string mode = "parabolic";
  // eps follows (h / h_base)^2 when set.
  bool scale_eps_with_h2 = false;
  // Nodes with |x1 - c| < exclude_cells * h for c in exclude_x1 are skipped.
  std::vector<double> exclude_x1;
  double exclude_cells = 0.0;
};

// Max-norm error against an exact solution over every ball node and level of
// each refinement; the fitted order is the least-squares log-log slope in
// tau (mode tau) or h (otherwise).
ConvergenceStudy convergence_study(const SolveConfig& base, int levels, const SpaceTimeFunction& target,
                                   const StudyOptions& opts = {});

using GradientFunction = std::function<Vec(const Point&, double)>;

// I(r, v, z0) for v given by its analytic gradient, with no cap: after
// x = x0 + 2 sqrt(s) y the kernel becomes a unit Gaussian in y, integrated by
// trapezoid on [-6, 6]^n; Simpson in s = t0 - t over [0, r^2].
double analytic_energy(int dim, const GradientFunction& dv, const ProbePoint& z0, double r, int y_points = 241,
                       int s_intervals = 200);

// Independent quadrature of weighted_energy for a sampled field: cell-exact
// kernel integrals (erf) against nodal |Dv|^2, three-point Gauss in time
// with linear interpolation between levels, same window [t0 - r^2, t0 - tau].
double reference_energy_quadrature(const SpaceTimeField& v, const ProbePoint& z0, double r);

// Smallest N for which Phi(r) <= Phi(R) + N ||h1||^2 ||h2||^2 / R^(2n+8) on
// a battery of caloric fields (x1^2 + 2t, and x1 x2 in 2D), evaluated with
// analytic_energy on dyadic radii down to R / 16.
double calibrate_remainder_constant(int dim);

// Smallest ratio Phi_e(2h) / |D(D_e u)(z0)|^4 for sampled caloric fields
// on the given grid geometry, with z0 on the zero line of D_e u.
double calibrate_chain_constant(const GridSpec& spec, double t0);

// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string content_hash(const std::string& bytes);
std::string config_fingerprint(const SolveConfig& cfg);

/// Directory of binary reference fields keyed by config fingerprint. Reads
/// may run concurrently; writes go through a temporary file and a rename.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path dir);

  std::optional<SpaceTimeField> load(const std::string& key, std::shared_ptr<const Grid> grid) const;
  void store(const std::string& key, const SpaceTimeField& field);
  SpaceTimeField reference(const SolveConfig& cfg, int refine);

 private:
  std::filesystem::path dir_;
  std::mutex write_mutex_;
};

}  // namespace parobs
