#include "parobs/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "parobs/errors.hpp"

namespace parobs {

double heat_kernel(int dim, double dist2, double t) {
  if (t <= 0) return 0.0;
  return std::exp(-dist2 / (4.0 * t)) / std::pow(4.0 * std::numbers::pi * t, 0.5 * dim);
}

double kernel_eval(const HeatKernel& k, const Point& x, double t) {
  double d2 = x[0] * x[0];
  if (k.dim >= 2) d2 += x[1] * x[1];
  return heat_kernel(k.dim, d2, t);
}

double kernel_time_derivative(int dim, double dist2, double t) {
  if (t <= 0) return 0.0;
  return heat_kernel(dim, dist2, t) * (dist2 / (4.0 * t * t) - 0.5 * dim / t);
}

double kernel_slice_mass(int dim, double t, double h, double half_width) {
  const int m = static_cast<int>(std::lround(half_width / h));
  // Trapezoid weights: endpoints carry half weight on each axis.
  auto w = [m](int i) { return (i == -m || i == m) ? 0.5 : 1.0; };
  double acc = 0;
  if (dim == 1) {
    for (int i = -m; i <= m; ++i) acc += w(i) * heat_kernel(1, (i * h) * (i * h), t);
    return acc * h;
  }
  for (int j = -m; j <= m; ++j)
    for (int i = -m; i <= m; ++i) {
      const double d2 = (i * h) * (i * h) + (j * h) * (j * h);
      acc += w(i) * w(j) * heat_kernel(2, d2, t);
    }
  return acc * h * h;
}

double kernel_caloricity_defect(int dim, double h) {
  static constexpr double xs[] = {0.0, 0.3, 0.7, 1.2};
  static constexpr double ts[] = {0.1, 0.25, 0.5, 1.0};
  double worst = 0;
  for (double t : ts)
    for (double a : xs)
      for (double b : (dim == 1 ? std::vector<double>{0.0} : std::vector<double>{0.0, 0.3, 0.7, 1.2})) {
        const Point x{a, b};
        auto G = [&](double dx, double dy) {
          const double p = x[0] + dx;
          const double q = x[1] + dy;
          return heat_kernel(dim, p * p + (dim == 2 ? q * q : 0.0), t);
        };
        const double g0 = G(0, 0);
        double lap = (G(h, 0) - 2 * g0 + G(-h, 0)) / (h * h);
        if (dim == 2) lap += (G(0, h) - 2 * g0 + G(0, -h)) / (h * h);
        const double d2 = a * a + (dim == 2 ? b * b : 0.0);
        worst = std::max(worst, std::abs(kernel_time_derivative(dim, d2, t) - lap));
      }
  return worst;
}

namespace {

// Profile on s = |x - x0| / r.
double xi(double s) {
  if (s <= 1) return 1.0;
  if (s >= 2) return 0.0;
  const double y = s - 1;
  return 1.0 - y * y * y * (10.0 + y * (-15.0 + 6.0 * y));
}

double xi_d1(double s) {
  if (s <= 1 || s >= 2) return 0.0;
  const double y = s - 1;
  return -30.0 * y * y * (1 - y) * (1 - y);
}

double xi_d2(double s) {
  if (s <= 1 || s >= 2) return 0.0;
  const double y = s - 1;
  return -60.0 * y * (1 - y) * (1 - 2 * y);
}

}  // namespace

CutoffValue cutoff_eval(const CutoffProfile& c, const Point& x) {
  if (!(c.radius > 0)) throw ConfigError("cut-off radius must be positive");
  const double dx = x[0] - c.center[0];
  const double dy = c.dim >= 2 ? x[1] - c.center[1] : 0.0;
  const double d = std::hypot(dx, dy);
  const double s = d / c.radius;
  CutoffValue out;
  out.value = xi(s);
  if (s > 1 && s < 2) {
    const double g = xi_d1(s) / c.radius;
    out.gradient = {g * dx / d, g * dy / d};
    out.laplacian = (xi_d2(s) + (c.dim - 1) * xi_d1(s) / s) / (c.radius * c.radius);
  }
  return out;
}

CutoffConstants cutoff_constants(const CutoffProfile& c, int samples) {
  CutoffConstants out;
  for (int j = 0; j < samples; ++j) {
    const double s = 1.0 + static_cast<double>(j) / (samples - 1);
    const Point x{c.center[0] + c.radius * s, c.center[1]};
    const CutoffValue v = cutoff_eval(c, x);
    out.gradient = std::max(out.gradient, c.radius * norm(v.gradient, c.dim));
    out.laplacian = std::max(out.laplacian, c.radius * c.radius * std::abs(v.laplacian));
  }
  return out;
}

double ProbePoint::R() const { return std::sqrt(t0); }

void validate_probe(const Grid& grid, const ProbePoint& z0) {
  if (!(z0.t0 > 0)) throw GeometryError("probe time t0 must be positive");
  try {
    grid.level_of(z0.t0);
  } catch (const DomainError&) {
    throw GeometryError("probe time t0 = " + std::to_string(z0.t0) + " is not a time level of the grid");
  }
  const double reach = norm(z0.x0, grid.dim()) + 6.0 * z0.R();
  const double shell = grid.shell_radius(Shell::probe);
  if (reach > shell * (1 + 1e-12)) {
    std::ostringstream os;
    os << "probe violates B_6R(x0) inside the probe shell: |x0| + 6R = " << reach << " > " << shell;
    throw GeometryError(os.str());
  }
}

namespace {

double dist2_to(const Grid& g, std::size_t n, const Point& x0) {
  const Point x = g.position(n);
  double d2 = (x[0] - x0[0]) * (x[0] - x0[0]);
  if (g.dim() == 2) d2 += (x[1] - x0[1]) * (x[1] - x0[1]);
  return d2;
}

struct Window {
  std::vector<std::size_t> nodes;
  std::vector<double> dist2;
  double weight = 0.0;
};

Window energy_window(const Grid& g, const Point& x0, double radius, int stride) {
  Window w;
  const auto anchor = g.multi_index(g.nearest_node(x0));
  const double r2 = radius * radius;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (!g.in_ball(n) || !g.is_box_interior(n)) continue;
    const auto i = g.multi_index(n);
    bool keep = true;
    for (int a = 0; a < g.dim(); ++a) keep = keep && (i[a] - anchor[a]) % stride == 0;
    if (!keep) continue;
    const double d2 = dist2_to(g, n, x0);
    if (d2 > r2) continue;
    w.nodes.push_back(n);
    w.dist2.push_back(d2);
  }
  w.weight = std::pow(stride * g.h(), g.dim());
  return w;
}

double slice_energy(const Grid& g, const Window& w, std::span<const double> a, std::span<const double> b, double theta,
                    double s) {
  double acc = 0;
  for (std::size_t j = 0; j < w.nodes.size(); ++j) {
    const Vec ga = slice_gradient(g, a, w.nodes[j]);
    const Vec gb = slice_gradient(g, b, w.nodes[j]);
    double d2 = 0;
    for (int ax = 0; ax < g.dim(); ++ax) {
      const double d = (1 - theta) * ga[ax] + theta * gb[ax];
      d2 += d * d;
    }
    acc += d2 * heat_kernel(g.dim(), w.dist2[j], s);
  }
  return acc * w.weight;
}

}  // namespace

double weighted_energy(const SpaceTimeField& v, const ProbePoint& z0, double r, const EnergyQuadrature& q) {
  if (!(r > 0)) throw ConfigError("energy radius must be positive");
  if (r > z0.R() * (1 + 1e-12)) throw DomainError("energy radius exceeds R = sqrt(t0)");
  const Grid& g = v.grid();
  const int k0 = g.level_of(z0.t0);
  const int stride = std::max(1, q.stride);
  const double t_lo = std::max(0.0, z0.t0 - r * r);
  const int k_hi = k0 - 1;
  if (k_hi < 0 || g.time(k_hi) <= t_lo) return 0.0;

  const Window w = energy_window(g, z0.x0, 10.0 * r, stride);
  std::vector<double> ts;
  std::vector<double> vals;
  int k = k_hi;
  for (; k >= 0 && g.time(k) > t_lo + 1e-12 * g.tau(); k -= stride) {
    ts.push_back(g.time(k));
    vals.push_back(slice_energy(g, w, v.level(k), v.level(k), 0.0, z0.t0 - g.time(k)));
  }
  // Lower end: interpolate between the levels bracketing t_lo.
  const int kb = static_cast<int>(std::floor(t_lo / g.tau() + 1e-9));
  const double theta = t_lo / g.tau() - kb;
  const int ka = std::min(kb + 1, g.levels() - 1);
  ts.push_back(t_lo);
  vals.push_back(slice_energy(g, w, v.level(kb), v.level(ka), std::clamp(theta, 0.0, 1.0), z0.t0 - t_lo));

  double acc = 0;
  for (std::size_t j = 0; j + 1 < ts.size(); ++j) acc += 0.5 * (vals[j] + vals[j + 1]) * (ts[j] - ts[j + 1]);
  return acc;
}

SpaceTimeField apply_cutoff(const SpaceTimeField& v, const CutoffProfile& c) {
  const Grid& g = v.grid();
  SpaceTimeField out(v.grid_ptr(), v.name() + "*cutoff", Provenance::derived);
  std::vector<double> weights(g.node_count());
  for (std::size_t n = 0; n < g.node_count(); ++n) weights[n] = cutoff_eval(c, g.position(n)).value;
  for (int k = 0; k < g.levels(); ++k) {
    const auto src = v.level(k);
    auto dst = out.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n) dst[n] = weights[n] * src[n];
  }
  return out;
}

namespace {

void check_disjoint(const SpaceTimeField& h1, const SpaceTimeField& h2, double theta) {
  const auto a = h1.values();
  const auto b = h2.values();
  if (a.size() != b.size()) throw PreconditionError("fields live on different grids");
  const std::size_t nodes = h1.grid().node_count();
  std::vector<std::string> bad;
  std::size_t count = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] < -theta || b[j] < -theta) throw PreconditionError("phi functional needs non-negative fields");
    if (a[j] > theta && b[j] > theta) {
      if (bad.size() < 8) bad.push_back("(k=" + std::to_string(j / nodes) + ", node=" + std::to_string(j % nodes) + ")");
      ++count;
    }
  }
  if (count > 0) {
    std::string msg = std::to_string(count) + " nodes violate h1 h2 = 0:";
    for (const auto& s : bad) msg += " " + s;
    throw PreconditionError(msg);
  }
}

}  // namespace

double phi_functional(const SpaceTimeField& h1, const SpaceTimeField& h2, const ProbePoint& z0, double r,
                      const CutoffProfile& c, double theta, const EnergyQuadrature& q) {
  check_disjoint(h1, h2, theta);
  const SpaceTimeField a = apply_cutoff(h1, c);
  const SpaceTimeField b = apply_cutoff(h2, c);
  return weighted_energy(a, z0, r, q) * weighted_energy(b, z0, r, q) / std::pow(r, 4);
}

std::vector<double> dyadic_radii(double R, double h) {
  std::vector<double> out;
  for (double r = R; r >= 2 * h * (1 - 1e-12); r *= 0.5) out.push_back(r);
  return out;
}

SpaceTimeField directional_part(const SpaceTimeField& u, const Vec& e, int sign) {
  const Grid& g = u.grid();
  SpaceTimeField out(u.grid_ptr(), sign > 0 ? "(D_e u)+" : "(D_e u)-", Provenance::derived);
  for (int k = 0; k < g.levels(); ++k) {
    const auto src = u.level(k);
    auto dst = out.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (!g.in_ball(n) || !g.is_box_interior(n)) continue;
      const Vec d = slice_gradient(g, src, n);
      double de = e[0] * d[0];
      if (g.dim() == 2) de += e[1] * d[1];
      dst[n] = sign > 0 ? std::max(de, 0.0) : std::max(-de, 0.0);
    }
  }
  return out;
}

double cylinder_norm2(const SpaceTimeField& v, const ProbePoint& z0, double r) {
  const Grid& g = v.grid();
  const int k0 = g.level_of(z0.t0);
  const double t_lo = std::max(0.0, z0.t0 - r * r);
  const int k_lo = std::min(k0, static_cast<int>(std::ceil(t_lo / g.tau() - 1e-9)));
  std::vector<std::size_t> nodes;
  for (std::size_t n = 0; n < g.node_count(); ++n)
    if (g.in_ball(n) && dist2_to(g, n, z0.x0) <= r * r) nodes.push_back(n);
  double acc = 0;
  for (int k = k_lo; k <= k0; ++k) {
    const auto s = v.level(k);
    double slice = 0;
    for (std::size_t n : nodes) slice += s[n] * s[n];
    const double w = (k == k_lo || k == k0) ? 0.5 : 1.0;
    acc += w * slice;
  }
  return acc * g.cell_volume() * g.tau();
}

MonotonicityReport monotonicity_scan(const SpaceTimeField& u, const ProbePoint& z0, const Vec& e,
                                     const std::vector<double>& radii, const ScanOptions& opts) {
  const Grid& g = u.grid();
  validate_probe(g, z0);
  const double R = z0.R();
  if (std::abs(norm(e, g.dim()) - 1.0) > 1e-9) throw PreconditionError("scan direction must be a unit vector");
  if (radii.empty()) throw PreconditionError("no radii to scan");
  for (double r : radii) {
    if (r < 2 * g.h() * (1 - 1e-12)) throw PreconditionError("radius " + std::to_string(r) + " is below 2h");
    if (r > R * (1 + 1e-12)) throw PreconditionError("radius " + std::to_string(r) + " exceeds R");
  }

  const SpaceTimeField h1 = directional_part(u, e, +1);
  const SpaceTimeField h2 = directional_part(u, e, -1);
  check_disjoint(h1, h2, opts.theta);
  const CutoffProfile zeta{g.dim(), z0.x0, R};
  const SpaceTimeField a = apply_cutoff(h1, zeta);
  const SpaceTimeField b = apply_cutoff(h2, zeta);
  const EnergyQuadrature fine{1};
  const EnergyQuadrature coarse{2};
  auto phi = [&](double r, const EnergyQuadrature& q) {
    return weighted_energy(a, z0, r, q) * weighted_energy(b, z0, r, q) / std::pow(r, 4);
  };

  MonotonicityReport rep;
  rep.direction = e;
  rep.radii = radii;
  rep.phi_R = phi(R, fine);
  const double phi_R_coarse = phi(R, coarse);
  rep.norm_plus = cylinder_norm2(h1, z0, 2 * R);
  rep.norm_minus = cylinder_norm2(h2, z0, 2 * R);
  rep.remainder = opts.N / std::pow(R, 2 * g.dim() + 8) * rep.norm_plus * rep.norm_minus;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  for (double r : radii) {
    const double f = phi(r, fine);
    const double c = phi(r, coarse);
    rep.phi.push_back(f);
    rep.phi_coarse.push_back(c);
    rep.tolerance = std::max(rep.tolerance, std::abs(f - c) + std::abs(rep.phi_R - phi_R_coarse));
    rep.worst_violation = std::max(rep.worst_violation, f - rep.phi_R - rep.remainder);
  }
  return rep;
}

}  // namespace parobs
