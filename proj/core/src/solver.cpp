#include "parobs/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include "parobs/errors.hpp"

namespace parobs {

void SolveConfig::validate() const {
  std::vector<std::string> errs;
  try {
    grid.validate();
  } catch (const ConfigError& e) {
    errs.insert(errs.end(), e.violations().begin(), e.violations().end());
  }
  if (validation_only) {
    if (!(penalty.eps > 0)) errs.push_back("penalty.eps must be positive");
  } else {
    try {
      penalty.validate();
    } catch (const ConfigError& e) {
      errs.insert(errs.end(), e.violations().begin(), e.violations().end());
    }
  }
  if (!(newton_tol > 0)) errs.push_back("solver.newton_tol must be positive");
  if (newton_max_iter < 1) errs.push_back("solver.newton_max_iter must be at least 1");
  if (!(M_bound >= 1)) errs.push_back("solver.M must be at least 1");
  if (lateral_bc.kind == LateralBoundary::Kind::exact && !lateral_bc.exact)
    errs.push_back("exact lateral boundary requires a boundary function");
  if (!errs.empty()) throw ConfigError(std::move(errs));
}

Stepper::Stepper(std::shared_ptr<const Grid> grid, const SolveConfig& cfg) : grid_(std::move(grid)), cfg_(&cfg) {
  const Grid& g = *grid_;
  if (cfg.initial.values.size() != g.node_count())
    throw ConfigError("initial datum is not sampled on the solver grid");
  slot_of_node_.assign(g.node_count(), -1);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (!g.in_ball(n) || !g.is_box_interior(n)) continue;
    bool ok = true;
    for (int a = 0; a < g.dim() && ok; ++a) {
      const std::size_t s = g.stride(a);
      ok = g.in_ball(n + s) && g.in_ball(n - s);
    }
    if (!ok) continue;
    slot_of_node_[n] = static_cast<long>(unknowns_.size());
    unknowns_.push_back(n);
  }
  frozen_ = cfg.initial.source ? sample_slice(g, cfg.initial.source) : cfg.initial.values;
  coupling_ = g.tau() / (g.h() * g.h());
  r_.resize(unknowns_.size());
  diag_.resize(unknowns_.size());
  delta_.assign(g.node_count(), 0.0);
  trial_.resize(g.node_count());
  cg_r_.resize(unknowns_.size());
  cg_z_.resize(unknowns_.size());
  cg_p_.assign(g.node_count(), 0.0);
  cg_q_.resize(unknowns_.size());
}

double Stepper::rhs(double s) const { return cfg_->validation_only ? 0.0 : penalty_eval(cfg_->penalty, s); }

double Stepper::rhs_slope(double s) const {
  return cfg_->validation_only ? 0.0 : penalty_slope(cfg_->penalty, s);
}

double Stepper::residual(std::span<const double> w, std::span<const double> state, std::vector<double>& r) const {
  const Grid& g = *grid_;
  const double tau = g.tau();
  const double center = 2.0 * g.dim();
  double rn = 0;
  for (std::size_t s = 0; s < unknowns_.size(); ++s) {
    const std::size_t n = unknowns_[s];
    double nb = 0;
    for (int a = 0; a < g.dim(); ++a) nb += w[n + g.stride(a)] + w[n - g.stride(a)];
    r[s] = w[n] - coupling_ * (nb - center * w[n]) + tau * rhs(w[n]) - state[n];
    rn = std::max(rn, std::abs(r[s]));
  }
  return rn;
}

void Stepper::solve_linear(std::span<const double> w, const std::vector<double>& f, std::vector<double>& delta) {
  const Grid& g = *grid_;
  const double tau = g.tau();
  const std::size_t m = unknowns_.size();
  const double center = 1.0 + 2.0 * g.dim() * coupling_;
  for (std::size_t s = 0; s < m; ++s) diag_[s] = center + tau * rhs_slope(w[unknowns_[s]]);

  if (g.dim() == 1) {
    // Unknowns are the contiguous nodes 1..N-2; Thomas elimination.
    std::vector<double>& c = cg_q_;
    std::vector<double>& d = cg_z_;
    const double off = -coupling_;
    c[0] = off / diag_[0];
    d[0] = -f[0] / diag_[0];
    for (std::size_t s = 1; s < m; ++s) {
      const double denom = diag_[s] - off * c[s - 1];
      c[s] = off / denom;
      d[s] = (-f[s] - off * d[s - 1]) / denom;
    }
    delta[unknowns_[m - 1]] = d[m - 1];
    for (std::size_t s = m - 1; s-- > 0;) delta[unknowns_[s]] = d[s] - c[s] * delta[unknowns_[s + 1]];
    return;
  }

  // Jacobi-preconditioned conjugate gradients on the SPD Jacobian.
  const double target = cfg_->newton_tol / 10.0;
  for (std::size_t s = 0; s < m; ++s) delta[unknowns_[s]] = 0.0;
  double rz = 0;
  for (std::size_t s = 0; s < m; ++s) {
    cg_r_[s] = -f[s];
    cg_z_[s] = cg_r_[s] / diag_[s];
    cg_p_[unknowns_[s]] = cg_z_[s];
    rz += cg_r_[s] * cg_z_[s];
  }
  const int max_iter = static_cast<int>(10 * m + 100);
  for (int it = 0; it < max_iter; ++it) {
    double rmax = 0;
    for (std::size_t s = 0; s < m; ++s) rmax = std::max(rmax, std::abs(cg_r_[s]));
    if (rmax <= target) break;
    double pq = 0;
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t n = unknowns_[s];
      double nb = 0;
      for (int a = 0; a < g.dim(); ++a) nb += cg_p_[n + g.stride(a)] + cg_p_[n - g.stride(a)];
      cg_q_[s] = diag_[s] * cg_p_[n] - coupling_ * nb;
      pq += cg_p_[n] * cg_q_[s];
    }
    const double alpha = rz / pq;
    double rz_new = 0;
    for (std::size_t s = 0; s < m; ++s) {
      delta[unknowns_[s]] += alpha * cg_p_[unknowns_[s]];
      cg_r_[s] -= alpha * cg_q_[s];
      cg_z_[s] = cg_r_[s] / diag_[s];
      rz_new += cg_r_[s] * cg_z_[s];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t s = 0; s < m; ++s) cg_p_[unknowns_[s]] = cg_z_[s] + beta * cg_p_[unknowns_[s]];
  }
}

void Stepper::gauss_seidel_sweep(std::span<double> w, std::span<const double> state) const {
  const Grid& g = *grid_;
  const double tau = g.tau();
  const double a0 = 1.0 + 2.0 * g.dim() * coupling_;
  for (const std::size_t n : unknowns_) {
    double nb = 0;
    for (int a = 0; a < g.dim(); ++a) nb += w[n + g.stride(a)] + w[n - g.stride(a)];
    const double b = state[n] + coupling_ * nb;
    // Scalar monotone equation a0 v + tau f(v) = b; g' >= a0 gives a bracket.
    double v = w[n];
    double gv = a0 * v + tau * rhs(v) - b;
    double lo = v - std::abs(gv) / a0;
    double hi = v + std::abs(gv) / a0;
    for (int it = 0; it < 80 && gv != 0.0; ++it) {
      if (gv > 0) hi = v; else lo = v;
      double next = v - gv / (a0 + tau * rhs_slope(v));
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      v = next;
      gv = a0 * v + tau * rhs(v) - b;
      if (hi - lo < 1e-16 * std::max(1.0, std::abs(v))) break;
    }
    w[n] = v;
  }
}

StepStats Stepper::advance(std::span<const double> state, int k_next, std::span<double> out) {
  const Grid& g = *grid_;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    if (!std::isfinite(state[n])) throw NumericError("non-finite value in solver state");

  const double t_next = g.time(k_next);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (slot_of_node_[n] >= 0) {
      out[n] = state[n];
    } else if (cfg_->lateral_bc.kind == LateralBoundary::Kind::exact) {
      out[n] = cfg_->lateral_bc.exact(g.position(n), t_next);
    } else {
      out[n] = frozen_[n];
    }
  }

  StepStats stats;
  std::vector<double> trace;
  double rn = residual(out, state, r_);
  trace.push_back(rn);
  bool stalled = false;
  while (rn > cfg_->newton_tol && stats.newton_iters < cfg_->newton_max_iter) {
    solve_linear(out, r_, delta_);
    double lam = 1.0;
    bool accepted = false;
    std::copy(out.begin(), out.end(), trial_.begin());
    while (lam >= 1.0 / 1024.0) {
      for (const std::size_t n : unknowns_) trial_[n] = out[n] + lam * delta_[n];
      const double rt = residual(trial_, state, r_);
      if (rt < rn) {
        std::copy(trial_.begin(), trial_.end(), out.begin());
        rn = rt;
        accepted = true;
        break;
      }
      lam *= 0.5;
    }
    ++stats.newton_iters;
    trace.push_back(rn);
    if (!accepted) {
      residual(out, state, r_);
      stalled = true;
      break;
    }
  }

  if (rn > cfg_->newton_tol) {
    const int max_sweeps = 20 * cfg_->newton_max_iter;
    while (rn > cfg_->newton_tol && stats.fallback_sweeps < max_sweeps) {
      gauss_seidel_sweep(out, state);
      rn = residual(out, state, r_);
      ++stats.fallback_sweeps;
      trace.push_back(rn);
    }
  }
  for (const std::size_t n : unknowns_)
    if (!std::isfinite(out[n])) throw NumericError("non-finite value produced by the solver");
  if (rn > cfg_->newton_tol) {
    throw SolverError("nonlinear solve did not converge at level " + std::to_string(k_next) +
                          (stalled ? " (Newton line search stalled)" : "") + ", residual " + std::to_string(rn),
                      rn, std::move(trace));
  }
  stats.residual = rn;
  return stats;
}

std::vector<double> step(std::shared_ptr<const Grid> grid, const SolveConfig& cfg, std::span<const double> state,
                         int k_next, StepStats* stats) {
  Stepper stepper(grid, cfg);
  std::vector<double> out(grid->node_count());
  const StepStats s = stepper.advance(state, k_next, out);
  if (stats) *stats = s;
  return out;
}

SolveReport solve(const SolveConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto grid = std::make_shared<const Grid>(cfg.grid);
  SolveReport report(SpaceTimeField(grid, "u_eps", Provenance::solved));
  SpaceTimeField& u = report.field;
  Stepper stepper(grid, cfg);
  std::copy(cfg.initial.values.begin(), cfg.initial.values.end(), u.level(0).begin());
  for (int k = 1; k < grid->levels(); ++k) {
    const StepStats s = stepper.advance(u.level(k - 1), k, u.level(k));
    report.newton_iters.push_back(s.newton_iters);
    report.fallback_sweeps.push_back(s.fallback_sweeps);
    report.max_residual = std::max(report.max_residual, s.residual);
  }
  for (double v : u.values()) report.sup_abs = std::max(report.sup_abs, std::abs(v));
  report.m_bound_ok = report.sup_abs <= cfg.M_bound + cfg.penalty.eps;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

bool LadderResult::pass() const {
  for (std::size_t j = 0; j < gaps.size(); ++j)
    if (!(gaps[j] <= bounds[j])) return false;
  return true;
}

namespace {

SolveConfig with_eps(const SolveConfig& cfg, double eps) {
  SolveConfig out = cfg;
  out.penalty.eps = eps;
  out.initial = resample_initial(cfg.initial, Grid(cfg.grid), eps);
  return out;
}

double sup_difference(const SpaceTimeField& a, const SpaceTimeField& b) {
  double gap = 0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t j = 0; j < va.size(); ++j) gap = std::max(gap, std::abs(va[j] - vb[j]));
  return gap;
}

}  // namespace

LadderResult epsilon_limit(const SolveConfig& cfg, std::span<const double> eps_ladder, double c_disc, int workers) {
  for (std::size_t j = 1; j < eps_ladder.size(); ++j)
    if (!(eps_ladder[j] < eps_ladder[j - 1])) throw ConfigError("epsilon ladder must be strictly decreasing");
  for (double e : eps_ladder)
    if (!(e > 0)) throw ConfigError("epsilon ladder entries must be positive");

  LadderResult result;
  result.c_disc = c_disc;
  result.eps.assign(eps_ladder.begin(), eps_ladder.end());

  std::vector<std::future<SolveReport>> jobs;
  std::vector<SolveReport> reports;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, workers));
  for (std::size_t j0 = 0; j0 < eps_ladder.size(); j0 += batch) {
    jobs.clear();
    for (std::size_t j = j0; j < std::min(eps_ladder.size(), j0 + batch); ++j) {
      const double e = eps_ladder[j];
      jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred,
                                [&cfg, e] { return solve(with_eps(cfg, e)); }));
    }
    for (auto& job : jobs) reports.push_back(job.get());
  }
  result.reports = std::move(reports);
  for (std::size_t j = 0; j + 1 < result.reports.size(); ++j) {
    result.gaps.push_back(sup_difference(result.reports[j].field, result.reports[j + 1].field));
    result.bounds.push_back(eps_ladder[j] + eps_ladder[j + 1] + c_disc);
  }
  return result;
}

double initial_time_derivative_check(const SpaceTimeField& field, const SolveConfig& cfg) {
  const Grid& g = field.grid();
  const auto u0 = field.level(0);
  const double reach = g.shell_radius(Shell::regularized);
  double defect = 0;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (!g.in_ball(n) || !g.is_box_interior(n) || norm(g.position(n), g.dim()) > reach) continue;
    bool inner = true;
    for (int a = 0; a < g.dim(); ++a) inner = inner && g.in_ball(n + g.stride(a)) && g.in_ball(n - g.stride(a));
    if (!inner) continue;
    const double f = cfg.validation_only ? 0.0 : penalty_eval(cfg.penalty, u0[n]);
    defect = std::max(defect, std::abs(time_derivative(field, 0, n) + f - slice_laplacian(g, u0, n)));
  }
  return defect;
}

}  // namespace parobs
