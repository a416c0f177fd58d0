#include "parobs/regularity.hpp"

#include <algorithm>
#include <cmath>

#include "parobs/errors.hpp"

namespace parobs {

namespace {

double dist2(const Grid& g, std::size_t n, const Point& c) {
  const Point x = g.position(n);
  double d = (x[0] - c[0]) * (x[0] - c[0]);
  if (g.dim() == 2) d += (x[1] - c[1]) * (x[1] - c[1]);
  return d;
}

std::vector<std::size_t> interior_ball(const Grid& g, const Point& c, double r) {
  std::vector<std::size_t> out;
  const double r2 = r * r * (1 + 1e-12);
  for (std::size_t n = 0; n < g.node_count(); ++n)
    if (g.in_ball(n) && g.is_box_interior(n) && dist2(g, n, c) <= r2) out.push_back(n);
  return out;
}

void require_inside_probe_shell(const Grid& g, const Point& x0, double reach) {
  if (norm(x0, g.dim()) + reach > g.shell_radius(Shell::probe) * (1 + 1e-12))
    throw GeometryError("ball of radius " + std::to_string(reach) + " around the probe leaves the probe shell");
}

double dot(const Vec& a, const Vec& b, int dim) {
  double s = a[0] * b[0];
  if (dim == 2) s += a[1] * b[1];
  return s;
}

double quad_form(const Mat& m, const Vec& e, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += e[i] * m[i][j] * e[j];
  return s;
}

}  // namespace

DirectionChoice choose_directions(const SpaceTimeField& u, const ProbePoint& z0, double theta_g) {
  const Grid& g = u.grid();
  const int k0 = g.level_of(z0.t0);
  const Vec du = slice_gradient(g, u.level(k0), g.nearest_node(z0.x0));
  DirectionChoice out;
  out.gradient_norm = norm(du, g.dim());
  if (out.gradient_norm <= theta_g) {
    out.e.push_back({1.0, 0.0});
    if (g.dim() == 2) out.e.push_back({0.0, 1.0});
    return out;
  }
  out.has_normal = true;
  out.nu = {du[0] / out.gradient_norm, g.dim() == 2 ? du[1] / out.gradient_norm : 0.0};
  if (g.dim() == 2) {
    out.e.push_back({-out.nu[1], out.nu[0]});
  } else {
    out.equation_route = true;
  }
  return out;
}

GradientGap gradient_gap(const SpaceTimeField& u, std::span<const double> phi, const ProbePoint& z0) {
  const Grid& g = u.grid();
  const double R = z0.R();
  require_inside_probe_shell(g, z0.x0, 3 * R);
  if (phi.size() != g.node_count()) throw ConfigError("initial slice does not match the grid");
  const int k0 = g.level_of(z0.t0);
  const auto near = interior_ball(g, z0.x0, 2 * R);
  auto gap_at = [&](int k) {
    double gap = 0;
    const auto s = u.level(k);
    for (std::size_t n : near) {
      const Vec a = slice_gradient(g, s, n);
      const Vec b = slice_gradient(g, phi, n);
      gap = std::max(gap, norm({a[0] - b[0], a[1] - b[1]}, g.dim()));
    }
    return gap;
  };
  GradientGap out;
  out.initial_gap = gap_at(0);
  for (int k = 1; k <= k0; ++k) out.sup_gap = std::max(out.sup_gap, gap_at(k));
  const auto s = u.level(k0);
  for (std::size_t n : interior_ball(g, z0.x0, 3 * R)) {
    const Vec a = slice_gradient(g, s, n);
    const Vec b = slice_gradient(g, phi, n);
    const Vec d{a[0] - b[0], a[1] - b[1]};
    out.energy_gap += dot(d, d, g.dim());
  }
  out.energy_gap *= g.cell_volume();
  return out;
}

double sup_directional_initial(const Grid& g, std::span<const double> phi, const ProbePoint& z0, const Vec& e) {
  double best = 0;
  for (std::size_t n : interior_ball(g, z0.x0, 2 * z0.R()))
    best = std::max(best, std::abs(dot(slice_gradient(g, phi, n), e, g.dim())));
  return best;
}

double weighted_hessian_energy(const SpaceTimeField& u, const ProbePoint& z0) {
  const Grid& g = u.grid();
  validate_probe(g, z0);
  const double R = z0.R();
  const int k0 = g.level_of(z0.t0);
  const CutoffProfile zeta{g.dim(), z0.x0, R};
  const auto nodes = interior_ball(g, z0.x0, 2 * R);
  std::vector<double> w2(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const double z = cutoff_eval(zeta, g.position(nodes[j])).value;
    w2[j] = z * z;
  }
  // Levels 0 .. k0 - 1; the lower limit t0 - R^2 = 0 is a level.
  double acc = 0;
  for (int k = 0; k < k0; ++k) {
    const auto s = u.level(k);
    const double lag = z0.t0 - g.time(k);
    double slice = 0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double hf = frobenius(slice_hessian(g, s, nodes[j]), g.dim());
      slice += hf * hf * w2[j] * heat_kernel(g.dim(), dist2(g, nodes[j], z0.x0), lag);
    }
    const double wt = (k == 0 || k == k0 - 1) ? 0.5 : 1.0;
    acc += wt * slice;
  }
  return acc * g.cell_volume() * g.tau();
}

SplitNorms split_norms(const SpaceTimeField& u, const ProbePoint& z0, const Vec& e) {
  const Grid& g = u.grid();
  validate_probe(g, z0);
  const double R = z0.R();
  return {cylinder_norm2(directional_part(u, e, +1), z0, 2 * R),
          cylinder_norm2(directional_part(u, e, -1), z0, 2 * R)};
}

std::vector<double> phi_profile(const SpaceTimeField& u, const ProbePoint& z0, const Vec& e,
                                const std::vector<double>& radii) {
  const Grid& g = u.grid();
  validate_probe(g, z0);
  const CutoffProfile zeta{g.dim(), z0.x0, z0.R()};
  const SpaceTimeField a = apply_cutoff(directional_part(u, e, +1), zeta);
  const SpaceTimeField b = apply_cutoff(directional_part(u, e, -1), zeta);
  std::vector<double> out;
  for (double r : radii) out.push_back(weighted_energy(a, z0, r) * weighted_energy(b, z0, r) / std::pow(r, 4));
  return out;
}

HessianChain hessian_bound_chain(const SpaceTimeField& u, const ProbePoint& z0, const ChainOptions& opts) {
  const Grid& g = u.grid();
  validate_probe(g, z0);
  const int k0 = g.level_of(z0.t0);
  const std::size_t node = g.nearest_node(z0.x0);
  const double u0 = u(k0, node);
  if (!(std::abs(u0) > opts.thresholds.value))
    throw PreconditionError("probe lies in the zero set: |u(z0)| = " + std::to_string(std::abs(u0)));
  if (!(opts.C > 0)) throw ConfigError("chain constant C must be positive");

  HessianChain out;
  out.directions = choose_directions(u, z0, opts.thresholds.gradient);
  const Mat hess = slice_hessian(g, u.level(k0), node);
  out.direct = frobenius(hess, g.dim());
  const double h = g.h();
  const std::vector<double> small{2 * h, 4 * h, 8 * h};
  std::vector<double> radii;
  for (double r : small)
    if (r <= z0.R() * (1 + 1e-12)) radii.push_back(r);
  double sum_b2 = 0;
  double sum_dee = 0;
  for (const Vec& e : out.directions.e) {
    auto prof = phi_profile(u, z0, e, radii);
    const double b = std::pow(std::max(prof.empty() ? 0.0 : prof.front(), 0.0) / opts.C, 0.25);
    out.bounds.push_back(b);
    out.phi_small.push_back(std::move(prof));
    sum_b2 += b * b;
    sum_dee += quad_form(hess, e, g.dim());
  }
  if (out.directions.has_normal) {
    out.d_nunu = time_derivative(u, k0, node) + penalty_eval(opts.penalty, u0) - sum_dee;
    out.assembled = std::sqrt(2 * sum_b2 + out.d_nunu * out.d_nunu);
  } else {
    out.assembled = std::sqrt(sum_b2);
  }
  return out;
}

SupScan theorem_sup_scan(const SpaceTimeField& u, double radius, const FreeBoundaryDecomposition& d) {
  const Grid& g = u.grid();
  const auto nodes = interior_ball(g, {0.0, 0.0}, radius);
  SupScan out;
  for (int k = 0; k < g.levels(); ++k) {
    const auto close = near_gamma(d, k, 1.0);
    const auto s = u.level(k);
    for (std::size_t n : nodes) {
      const double hf = frobenius(slice_hessian(g, s, n), g.dim());
      if (close[n]) {
        out.hessian_near_gamma = std::max(out.hessian_near_gamma, hf);
        ++out.excluded;
      } else if (hf > out.hessian) {
        out.hessian = hf;
        out.hessian_at = {k, g.multi_index(n)};
      }
      const double ut = std::abs(time_derivative(u, k, n));
      if (ut > out.time_derivative) {
        out.time_derivative = ut;
        out.time_derivative_at = {k, g.multi_index(n)};
      }
    }
  }
  return out;
}

double sup_time_derivative(const SpaceTimeField& u, double radius) {
  const Grid& g = u.grid();
  double best = 0;
  const auto nodes = interior_ball(g, {0.0, 0.0}, radius);
  for (int k = 0; k < g.levels(); ++k)
    for (std::size_t n : nodes) best = std::max(best, std::abs(time_derivative(u, k, n)));
  return best;
}

double holder_half_check(const SpaceTimeField& u, double radius) {
  const Grid& g = u.grid();
  const auto nodes = interior_ball(g, {0.0, 0.0}, radius);
  std::vector<Vec> grads(nodes.size() * g.levels());
  for (int k = 0; k < g.levels(); ++k)
    for (std::size_t j = 0; j < nodes.size(); ++j) grads[k * nodes.size() + j] = slice_gradient(g, u.level(k), nodes[j]);
  double worst = 0;
  for (int lag = 1; lag < g.levels(); lag *= 2) {
    const double denom = std::sqrt(lag * g.tau());
    for (int k = lag; k < g.levels(); ++k)
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const Vec& a = grads[k * nodes.size() + j];
        const Vec& b = grads[(k - lag) * nodes.size() + j];
        worst = std::max(worst, norm({a[0] - b[0], a[1] - b[1]}, g.dim()) / denom);
      }
  }
  return worst;
}

double equation_consistency(const SpaceTimeField& u, const PenaltyFamily& pf, double theta_u, double radius) {
  const Grid& g = u.grid();
  const auto nodes = interior_ball(g, {0.0, 0.0}, radius);
  double worst = 0;
  for (int k = 1; k < g.levels(); ++k) {
    const auto s = u.level(k);
    for (std::size_t n : nodes) {
      if (!(std::abs(s[n]) > theta_u)) continue;
      const double r = slice_laplacian(g, s, n) - time_derivative(u, k, n) - exact_rhs(pf, s[n]);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

namespace {

double b0(double s) {
  if (s >= 1) return 0.0;
  const double q = 1 - s * s;
  return q * q * q;
}
double b1(double s) {
  if (s >= 1) return 0.0;
  const double q = 1 - s * s;
  return -6 * s * q * q;
}
double b2(double s) {
  if (s >= 1) return 0.0;
  const double q = 1 - s * s;
  return -6 * q * q + 24 * s * s * q;
}

}  // namespace

double TestBump::value(const Point& x, double t, int dim) const {
  const double dx = x[0] - center[0];
  const double dy = dim == 2 ? x[1] - center[1] : 0.0;
  return b0(std::hypot(dx, dy) / a) * b0(std::abs(t - tc) / w);
}

double TestBump::c2_norm(int dim) const {
  double d1 = 0;
  double d2 = 0;
  for (int j = 0; j <= 10000; ++j) {
    const double s = j / 10000.0;
    d1 = std::max(d1, std::abs(b1(s)));
    // Radial eigenvalue b'' and tangential ones b'(s)/s = -6 (1 - s^2)^2.
    const double tang = -6 * (1 - s * s) * (1 - s * s);
    d2 = std::max(d2, std::sqrt(b2(s) * b2(s) + (dim - 1) * tang * tang));
  }
  return 1.0 + d1 / a + d2 / (a * a) + d1 / w;
}

std::vector<TestBump> bump_battery(const Grid& grid) {
  const double s = grid.shell_radius(Shell::probe);
  const double T = grid.spec().horizon;
  const int n = grid.dim();
  auto at = [n](double x, double y) { return Point{x, n == 2 ? y : 0.0}; };
  return {
      {at(0.0, 0.0), 0.3 * s, 0.5 * T, 0.4 * T},
      {at(0.3 * s, 0.1 * s), 0.25 * s, 0.3 * T, 0.25 * T},
      {at(-0.3 * s, -0.2 * s), 0.25 * s, 0.6 * T, 0.3 * T},
      {at(0.15 * s, -0.3 * s), 0.2 * s, 0.25 * T, 0.2 * T},
      {at(-0.5 * s, 0.4 * s), 0.3 * s, 0.7 * T, 0.25 * T},
  };
}

double weak_pairing(const SpaceTimeField& v, const TestBump& psi) {
  const Grid& g = v.grid();
  std::vector<double> cur(g.node_count());
  std::vector<double> next(g.node_count());
  auto fill = [&](std::vector<double>& out, int k) {
    for (std::size_t n = 0; n < g.node_count(); ++n) out[n] = psi.value(g.position(n), g.time(k), g.dim());
  };
  fill(cur, 0);
  double acc = 0;
  for (int k = 0; k + 1 < g.levels(); ++k) {
    fill(next, k + 1);
    const auto s = v.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (!g.in_ball(n) || !g.is_box_interior(n) || s[n] == 0.0) continue;
      acc += s[n] * (slice_laplacian(g, cur, n) + (next[n] - cur[n]) / g.tau());
    }
    std::swap(cur, next);
  }
  return acc * g.cell_volume() * g.tau();
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs at least two matching samples");
  double mx = 0;
  double my = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] > 0) || !(y[j] > 0)) throw DomainError("log-log fit needs positive samples");
    mx += std::log(x[j]);
    my += std::log(y[j]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0;
  double sxx = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double dx = std::log(x[j]) - mx;
    sxy += dx * (std::log(y[j]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace parobs
