#pragma once

#include <vector>

#include "parobs/grid.hpp"

namespace parobs {

// Gaussian fundamental solution of the heat equation in n dimensions,
// exactly zero for t <= 0.
struct HeatKernel {
  int dim = 1;
};

double heat_kernel(int dim, double dist2, double t);
double kernel_eval(const HeatKernel& k, const Point& x, double t);
// Analytic time derivative; equals the Laplacian of G for t > 0.
double kernel_time_derivative(int dim, double dist2, double t);

// Trapezoid quadrature of G(., t) over the box [-half_width, half_width]^n.
double kernel_slice_mass(int dim, double t, double h, double half_width);
// max over a fixed sample of (x, t), t in [0.1, 1], of |d_t G - Delta_h G|.
double kernel_caloricity_defect(int dim, double h);

/// C^2 radial cut-off: 1 on B_r(center), 0 outside B_2r(center), quintic
/// smoothstep in between.
struct CutoffProfile {
  int dim = 1;
  Point center{0.0, 0.0};
  double radius = 1.0;
};

struct CutoffValue {
  double value = 0.0;
  Vec gradient{0.0, 0.0};
  double laplacian = 0.0;
};

CutoffValue cutoff_eval(const CutoffProfile& c, const Point& x);

struct CutoffConstants {
  double gradient = 0.0;   // sup r |D xi|
  double laplacian = 0.0;  // sup r^2 |Delta xi|
};
// Dense sampling of the transition annulus along a ray from the center.
CutoffConstants cutoff_constants(const CutoffProfile& c, int samples = 20001);

/// Probe point z0 = (x0, t0) with parabolic scale R = sqrt(t0).
struct ProbePoint {
  Point x0{0.0, 0.0};
  double t0 = 0.0;

  double R() const;
};

// Throws GeometryError unless t0 > 0 is a grid level and B_6R(x0) lies in
// the probe shell.
void validate_probe(const Grid& grid, const ProbePoint& z0);

struct EnergyQuadrature {
  // Stride 2 sums every other node and level with doubled weights; the
  // difference to stride 1 estimates the quadrature error.
  int stride = 1;
};

/// int_{t0-r^2}^{t0} int |Dv|^2 G(x - x0, t0 - t) dx dt. Space: trapezoid over
/// interior ball nodes within 10 r of x0. Time: trapezoid through the level
/// slices (linear interpolation at t0 - r^2), upper limit capped at t0 - tau.
double weighted_energy(const SpaceTimeField& v, const ProbePoint& z0, double r, const EnergyQuadrature& q = {});

// Nodewise product c(x) v(x, t).
SpaceTimeField apply_cutoff(const SpaceTimeField& v, const CutoffProfile& c);

// (1/r^4) I(r, c h1) I(r, c h2). h1, h2 must be non-negative with disjoint
// supports: any node with h1 > theta and h2 > theta is a PreconditionError.
double phi_functional(const SpaceTimeField& h1, const SpaceTimeField& h2, const ProbePoint& z0, double r,
                      const CutoffProfile& c, double theta, const EnergyQuadrature& q = {});

struct MonotonicityReport {
  Vec direction{1.0, 0.0};
  std::vector<double> radii;
  std::vector<double> phi;
  std::vector<double> phi_coarse;
  double phi_R = 0.0;
  double remainder = 0.0;
  double norm_plus = 0.0;   // ||h1||^2 over the clipped Q_2R
  double norm_minus = 0.0;  // ||h2||^2
  double tolerance = 0.0;   // Richardson estimate of the quadrature error
  double worst_violation = 0.0;
  bool pass() const { return worst_violation <= tolerance; }
};

struct ScanOptions {
  double N = 0.0;      // remainder constant
  double theta = 0.0;  // disjoint-support tolerance
};

// Dyadic radii R 2^-j down to (and including the last one >= ) 2h.
std::vector<double> dyadic_radii(double R, double h);

MonotonicityReport monotonicity_scan(const SpaceTimeField& u, const ProbePoint& z0, const Vec& e,
                                     const std::vector<double>& radii, const ScanOptions& opts);

// (D_e u)_+ (sign > 0) or (D_e u)_- (sign < 0) by central differences;
// zero on nodes without a full stencil.
SpaceTimeField directional_part(const SpaceTimeField& u, const Vec& e, int sign);

// Trapezoid L2 norm squared over (B_r(x0) x [t0 - r^2, t0]) clipped to t >= 0.
double cylinder_norm2(const SpaceTimeField& v, const ProbePoint& z0, double r);

}  // namespace parobs
