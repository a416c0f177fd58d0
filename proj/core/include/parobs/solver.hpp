#pragma once

#include <memory>
#include <span>
#include <vector>

#include "parobs/grid.hpp"
#include "parobs/penalty.hpp"

namespace parobs {

/// Dirichlet data on the lateral surface. `frozen` holds the analytic
/// initial datum phi fixed in time; `exact` evaluates a space-time function.
struct LateralBoundary {
  enum class Kind { frozen, exact };
  Kind kind = Kind::frozen;
  SpaceTimeFunction exact;
};

struct SolveConfig {
  GridSpec grid;
  PenaltyFamily penalty;
  MollifiedInitial initial;
  LateralBoundary lateral_bc;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double M_bound = 1.0;
  // Drops the right-hand side entirely (lambda+ = lambda- = 0); only used to
  // validate the heat part of the scheme against caloric data.
  bool validation_only = false;

  void validate() const;
};

struct StepStats {
  int newton_iters = 0;
  int fallback_sweeps = 0;
  double residual = 0.0;
};

struct SolveReport {
  explicit SolveReport(SpaceTimeField f) : field(std::move(f)) {}

  SpaceTimeField field;
  std::vector<int> newton_iters;  // per step
  std::vector<int> fallback_sweeps;
  double max_residual = 0.0;
  double wall_seconds = 0.0;
  double sup_abs = 0.0;
  bool m_bound_ok = true;
};

/// Backward-Euler stepper for d_t u = Delta_h u - f_eps(u) on the interior
/// ball nodes. Each step solves
///   (I - tau Delta_h) w + tau f_eps(w) = state
/// by damped Newton (tridiagonal elimination in 1D, Jacobi-preconditioned CG
/// in 2D) with a nonlinear Gauss-Seidel fallback when the line search stalls.
class Stepper {
 public:
  Stepper(std::shared_ptr<const Grid> grid, const SolveConfig& cfg);

  // Writes level k_next into out; boundary nodes get the lateral data.
  StepStats advance(std::span<const double> state, int k_next, std::span<double> out);

  const std::vector<std::size_t>& unknowns() const { return unknowns_; }

 private:
  double rhs(double s) const;
  double rhs_slope(double s) const;
  double residual(std::span<const double> w, std::span<const double> state, std::vector<double>& r) const;
  void solve_linear(std::span<const double> w, const std::vector<double>& f, std::vector<double>& delta);
  void gauss_seidel_sweep(std::span<double> w, std::span<const double> state) const;

  std::shared_ptr<const Grid> grid_;
  const SolveConfig* cfg_;
  std::vector<std::size_t> unknowns_;
  std::vector<long> slot_of_node_;
  std::vector<double> frozen_;
  double coupling_ = 0.0;  // tau / h^2
  std::vector<double> r_, delta_, trial_, diag_, cg_r_, cg_z_, cg_p_, cg_q_;
};

std::vector<double> step(std::shared_ptr<const Grid> grid, const SolveConfig& cfg, std::span<const double> state,
                         int k_next, StepStats* stats = nullptr);

SolveReport solve(const SolveConfig& cfg);

struct LadderResult {
  std::vector<double> eps;
  std::vector<SolveReport> reports;
  std::vector<double> gaps;    // sup |u^{eps_j} - u^{eps_{j+1}}| over all nodes
  std::vector<double> bounds;  // eps_j + eps_{j+1} + c_disc
  double c_disc = 0.0;

  bool pass() const;
};

// Runs one solve per eps (initial datum re-mollified at each eps) and
// compares consecutive entries. `workers` > 1 runs the solves concurrently;
// results are identical to a sequential run.
LadderResult epsilon_limit(const SolveConfig& cfg, std::span<const double> eps_ladder, double c_disc, int workers = 1);

// max over interior nodes of the regularization ball of
// |d_t u(.,0) + f_eps(phi_eps) - Delta_h phi_eps|,
// with the one-sided second-order stencil at t = 0.
double initial_time_derivative_check(const SpaceTimeField& field, const SolveConfig& cfg);

}  // namespace parobs
