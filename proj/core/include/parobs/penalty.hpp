#pragma once

#include <span>
#include <vector>

#include "parobs/grid.hpp"

namespace parobs {

/// Smooth monotone regularization of the two-phase right-hand side
/// lambda+ chi{s>0} - lambda- chi{s<0}.
struct PenaltyFamily {
  double lambda_plus = 1.0;
  double lambda_minus = 1.0;
  double eps = 1e-3;

  void validate() const;
};

// f_eps(s): lambda+ for s >= eps, -lambda- for s <= -eps, and the quintic
// smoothstep in between (C^2, non-decreasing).
double penalty_eval(const PenaltyFamily& pf, double s);
double penalty_slope(const PenaltyFamily& pf, double s);
// Analytic Lipschitz constant of the interpolant: 15 (lambda+ + lambda-) / (16 eps).
double penalty_lipschitz_bound(const PenaltyFamily& pf);
// Largest difference quotient over a uniform sample of [-2 eps, 2 eps].
double measured_penalty_lipschitz(const PenaltyFamily& pf, int samples = 4001);

// The unregularized right-hand side; both indicators vanish at s = 0.
double exact_rhs(const PenaltyFamily& pf, double s);

/// Initial datum after mollification, sampled on the grid, together with
/// the sup gap it was certified against.
struct MollifiedInitial {
  SpatialFunction source;  // empty for sampled sources
  double eps = 0.0;
  double radius = 0.0;  // 0 when no mollification was applied
  double certified_gap = 0.0;
  bool mollified = false;
  std::vector<double> values;
};

struct MollifyOptions {
  int quadrature_points = 48;  // per axis, on the unit support of the kernel
};

// Convolves phi with the standard C-infinity bump at a fixed radius. The
// radius starts at half the gap between the outer and regularization balls
// and is halved until max_nodes |phi - phi_eps| <= eps, then bisected back
// up to the largest radius that still certifies; falling below h is a
// CertificationError.
MollifiedInitial mollify_initial(const SpatialFunction& phi, double eps, const Grid& grid,
                                 const MollifyOptions& opts = {});
// Discrete convolution variant for data only known at the nodes.
MollifiedInitial mollify_sampled(std::span<const double> phi, double eps, const Grid& grid);
// phi sampled as-is (certified_gap = 0); for validation runs with exact data.
MollifiedInitial unmollified(const SpatialFunction& phi, const Grid& grid, double eps);
// Same treatment as `base` (mollified or not) on another grid or eps; needs
// an analytic source.
MollifiedInitial resample_initial(const MollifiedInitial& base, const Grid& grid, double eps);

}  // namespace parobs
