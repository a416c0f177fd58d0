#include "parobs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "parobs/errors.hpp"
#include "parobs/field_io.hpp"
#include "parobs/regularity.hpp"

namespace parobs {

double stationary_two_phase(const Point& x, double lambda_plus, double lambda_minus) {
  const double s = x[0];
  return s >= 0 ? 0.5 * lambda_plus * s * s : -0.5 * lambda_minus * s * s;
}

void CaloricPolynomial::validate() const {
  const double lap = 2.0 * (A[0][0] + A[1][1]);
  if (A[0][1] != A[1][0]) throw ConfigError("caloric polynomial needs a symmetric quadratic part");
  if (std::abs(lap - q) > 1e-12 * std::max(1.0, std::abs(q)))
    throw ConfigError("not caloric: Laplacian of p is " + format_number(lap) + " but the time coefficient is " +
                      format_number(q));
}

double CaloricPolynomial::operator()(const Point& x, double t) const {
  double p = c + b[0] * x[0] + b[1] * x[1];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) p += A[i][j] * x[i] * x[j];
  return p + q * t;
}

CaloricPolynomial standard_caloric() {
  CaloricPolynomial p;
  p.A[0][0] = 1.0;
  p.q = 2.0;
  return p;
}

double heat_polynomial4(const Point& x, double t) {
  const double s = x[0] * x[0];
  return s * s + 12.0 * s * t + 12.0 * t * t;
}

ExactSolution ExactSolution::stationary(double lambda_plus, double lambda_minus) {
  return {Kind::stationary_two_phase, "stationary_two_phase",
          [=](const Point& x, double) { return stationary_two_phase(x, lambda_plus, lambda_minus); }};
}

ExactSolution ExactSolution::caloric(const CaloricPolynomial& p) {
  p.validate();
  return {Kind::caloric_polynomial, "caloric_polynomial", [p](const Point& x, double t) { return p(x, t); }};
}

ExactSolution ExactSolution::custom(std::string name, SpaceTimeFunction f) {
  return {Kind::custom_closed_form, std::move(name), std::move(f)};
}

namespace {

void want_params(const std::string& name, const std::vector<double>& p, std::size_t n) {
  if (p.size() != n)
    throw ConfigError("profile '" + name + "' takes " + std::to_string(n) + " parameters, got " +
                      std::to_string(p.size()));
}

}  // namespace

SpatialFunction initial_profile(const std::string& name, const std::vector<double>& p) {
  if (name == "hump") {
    want_params(name, p, 3);
    const double c = p[0], kappa = p[1], a = p[2];
    if (!(a > 0)) throw ConfigError("hump radius must be positive");
    return [=](const Point& x) {
      const double r = std::hypot(x[0], x[1]);
      return r <= a ? c - 0.5 * kappa * r * r : c - kappa * a * r + 0.5 * kappa * a * a;
    };
  }
  if (name == "stationary") {
    want_params(name, p, 2);
    const double lp = p[0], lm = p[1];
    return [=](const Point& x) { return stationary_two_phase(x, lp, lm); };
  }
  if (name == "dead_zone") {
    want_params(name, p, 2);
    const double w = p[0], beta = p[1];
    return [=](const Point& x) {
      const double s = std::max(std::abs(x[0]) - w, 0.0);
      return (x[0] >= 0 ? 0.5 : -0.5) * beta * s * s;
    };
  }
  if (name == "linear") {
    want_params(name, p, 1);
    const double slope = p[0];
    return [=](const Point& x) { return slope * x[0]; };
  }
  if (name == "caloric") {
    want_params(name, p, 0);
    return [](const Point& x) { return x[0] * x[0]; };
  }
  if (name == "heat4") {
    want_params(name, p, 0);
    return [](const Point& x) { return heat_polynomial4(x, 0.0); };
  }
  throw ConfigError("unknown initial profile '" + name + "'");
}

std::vector<std::string> profile_names() { return {"caloric", "dead_zone", "heat4", "hump", "linear", "stationary"}; }

SpaceTimeField fine_grid_reference(const SolveConfig& cfg, int refine) {
  if (refine != 2 && refine != 4) throw ConfigError("reference refinement must be 2 or 4");
  SolveConfig fine = cfg;
  fine.grid.h = cfg.grid.h / refine;
  fine.grid.tau = cfg.grid.tau / (refine * refine);
  fine.penalty.eps = cfg.penalty.eps / 10.0;
  const Grid fine_grid(fine.grid);
  fine.initial = resample_initial(cfg.initial, fine_grid, fine.penalty.eps);
  const SolveReport rep = solve(fine);

  auto coarse = std::make_shared<const Grid>(cfg.grid);
  SpaceTimeField out(coarse, "reference", Provenance::derived);
  const Grid& fg = rep.field.grid();
  for (int k = 0; k < coarse->levels(); ++k) {
    const auto src = rep.field.level(k * refine * refine);
    auto dst = out.level(k);
    for (std::size_t n = 0; n < coarse->node_count(); ++n) {
      const auto i = coarse->multi_index(n);
      dst[n] = src[fg.flat({i[0] * refine, i[1] * refine})];
    }
  }
  return out;
}

ConvergenceStudy convergence_study(const SolveConfig& base, int levels, const SpaceTimeFunction& target,
                                   const StudyOptions& opts) {
  if (levels < 3) throw ConfigError("a convergence study needs at least 3 levels");
  if (opts.mode != "tau" && opts.mode != "h" && opts.mode != "parabolic")
    throw ConfigError("convergence mode must be tau, h or parabolic");
  ConvergenceStudy study;
  study.mode = opts.mode;
  std::vector<double> xs;
  std::vector<double> errs;
  for (int l = 0; l < levels; ++l) {
    SolveConfig cfg = base;
    const double f = std::pow(2.0, l);
    if (opts.mode != "tau") cfg.grid.h = base.grid.h / f;
    if (opts.mode == "tau") cfg.grid.tau = base.grid.tau / f;
    if (opts.mode == "parabolic") cfg.grid.tau = base.grid.tau / (f * f);
    if (opts.scale_eps_with_h2) cfg.penalty.eps = base.penalty.eps * std::pow(cfg.grid.h / base.grid.h, 2);
    const Grid grid(cfg.grid);
    cfg.initial = resample_initial(base.initial, grid, cfg.penalty.eps);
    const SolveReport rep = solve(cfg);
    const Grid& g = rep.field.grid();
    double err = 0;
    for (int k = 0; k < g.levels(); ++k) {
      const auto s = rep.field.level(k);
      for (std::size_t n = 0; n < g.node_count(); ++n) {
        if (!g.in_ball(n)) continue;
        const Point x = g.position(n);
        bool skip = false;
        for (double c : opts.exclude_x1) skip = skip || std::abs(x[0] - c) < opts.exclude_cells * g.h() - 1e-12;
        if (skip) continue;
        err = std::max(err, std::abs(s[n] - target(x, g.time(k))));
      }
    }
    study.levels.push_back({cfg.grid.h, cfg.grid.tau, cfg.penalty.eps, err});
    xs.push_back(opts.mode == "tau" ? cfg.grid.tau : cfg.grid.h);
    errs.push_back(std::max(err, 1e-300));
  }
  for (std::size_t j = 1; j < errs.size(); ++j) study.monotone = study.monotone && errs[j] < errs[j - 1];
  study.fitted_order = loglog_slope(xs, errs);
  return study;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_fingerprint(const SolveConfig& cfg) {
  std::ostringstream os;
  const GridSpec& g = cfg.grid;
  os << "dim=" << g.dim << ";radius=" << format_number(g.radius) << ";h=" << format_number(g.h)
     << ";tau=" << format_number(g.tau) << ";T=" << format_number(g.horizon) << ";shells=";
  for (double f : g.shell_fractions) os << format_number(f) << ',';
  os << ";l+=" << format_number(cfg.penalty.lambda_plus) << ";l-=" << format_number(cfg.penalty.lambda_minus)
     << ";eps=" << format_number(cfg.penalty.eps) << ";tol=" << format_number(cfg.newton_tol)
     << ";iters=" << cfg.newton_max_iter << ";validation=" << cfg.validation_only
     << ";bc=" << static_cast<int>(cfg.lateral_bc.kind) << ";mollified=" << cfg.initial.mollified
     << ";initial=";
  std::string bytes(reinterpret_cast<const char*>(cfg.initial.values.data()),
                    cfg.initial.values.size() * sizeof(double));
  os << content_hash(bytes);
  return content_hash(os.str());
}

ReferenceCache::ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<SpaceTimeField> ReferenceCache::load(const std::string& key, std::shared_ptr<const Grid> grid) const {
  const auto path = dir_ / (key + ".parf");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_field_binary(path.string(), std::move(grid), "reference");
}

void ReferenceCache::store(const std::string& key, const SpaceTimeField& field) {
  std::lock_guard<std::mutex> lock(write_mutex_);
  const auto path = dir_ / (key + ".parf");
  const auto tmp = dir_ / (key + ".parf.tmp");
  write_field_binary(tmp.string(), field);
  std::filesystem::rename(tmp, path);
}

SpaceTimeField ReferenceCache::reference(const SolveConfig& cfg, int refine) {
  const std::string key = config_fingerprint(cfg) + "-r" + std::to_string(refine);
  auto grid = std::make_shared<const Grid>(cfg.grid);
  if (auto hit = load(key, grid)) return std::move(*hit);
  SpaceTimeField ref = fine_grid_reference(cfg, refine);
  store(key, ref);
  return ref;
}

}  // namespace parobs

namespace parobs {

namespace {

// Composite Simpson on [a, b] with an even number of intervals.
template <class F>
double simpson(F&& f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double step = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int j = 1; j < intervals; ++j) acc += (j % 2 ? 4.0 : 2.0) * f(a + j * step);
  return acc * step / 3.0;
}

}  // namespace

double analytic_energy(int dim, const GradientFunction& dv, const ProbePoint& z0, double r, int y_points,
                       int s_intervals) {
  const double L = 6.0;
  const double dy = 2 * L / (y_points - 1);
  const double norm = std::pow(std::numbers::pi, -0.5 * dim);
  auto slice = [&](double s) {
    const double scale = 2.0 * std::sqrt(s);
    double acc = 0;
    const int jn = dim == 2 ? y_points : 1;
    for (int j = 0; j < jn; ++j) {
      const double y1 = dim == 2 ? -L + j * dy : 0.0;
      const double wj = dim == 2 ? ((j == 0 || j == y_points - 1) ? 0.5 : 1.0) : 1.0;
      for (int i = 0; i < y_points; ++i) {
        const double y0 = -L + i * dy;
        const double wi = (i == 0 || i == y_points - 1) ? 0.5 : 1.0;
        const Point x{z0.x0[0] + scale * y0, z0.x0[1] + scale * y1};
        const Vec g = dv(x, z0.t0 - s);
        double g2 = g[0] * g[0];
        if (dim == 2) g2 += g[1] * g[1];
        acc += wi * wj * g2 * std::exp(-(y0 * y0 + y1 * y1));
      }
    }
    return acc * std::pow(dy, dim) * norm;
  };
  return simpson(slice, 0.0, r * r, s_intervals);
}

double reference_energy_quadrature(const SpaceTimeField& v, const ProbePoint& z0, double r) {
  const Grid& g = v.grid();
  const int k0 = g.level_of(z0.t0);
  const double t_lo = std::max(0.0, z0.t0 - r * r);
  const double t_hi = z0.t0 - g.tau();
  if (t_hi <= t_lo) return 0.0;
  std::vector<std::size_t> nodes;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (!g.in_ball(n) || !g.is_box_interior(n)) continue;
    const Point x = g.position(n);
    const double d = std::hypot(x[0] - z0.x0[0], g.dim() == 2 ? x[1] - z0.x0[1] : 0.0);
    if (d <= 10 * r) nodes.push_back(n);
  }
  auto grad2 = [&](int k) {
    std::vector<double> out(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const Vec d = slice_gradient(g, v.level(k), nodes[j]);
      out[j] = d[0] * d[0] + (g.dim() == 2 ? d[1] * d[1] : 0.0);
    }
    return out;
  };
  // Mass of G(. - x0, s) over the dual cell of node n.
  auto cell_mass = [&](std::size_t n, double s) {
    const Point x = g.position(n);
    const double w = std::sqrt(4.0 * s);
    double m = 1;
    for (int a = 0; a < g.dim(); ++a) {
      const double lo = (x[a] - 0.5 * g.h() - z0.x0[a]) / w;
      const double hi = (x[a] + 0.5 * g.h() - z0.x0[a]) / w;
      m *= 0.5 * (std::erf(hi) - std::erf(lo));
    }
    return m;
  };
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double acc = 0;
  const int kb = static_cast<int>(std::floor(t_lo / g.tau() + 1e-9));
  for (int k = kb; k < k0 - 1; ++k) {
    const double a = std::max(g.time(k), t_lo);
    const double b = std::min(g.time(k + 1), t_hi);
    if (b <= a) continue;
    const auto e0 = grad2(k);
    const auto e1 = grad2(k + 1);
    for (int q = 0; q < 3; ++q) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
      const double theta = (t - g.time(k)) / g.tau();
      double slice = 0;
      for (std::size_t j = 0; j < nodes.size(); ++j)
        slice += ((1 - theta) * e0[j] + theta * e1[j]) * cell_mass(nodes[j], z0.t0 - t);
      acc += 0.5 * (b - a) * gw[q] * slice;
    }
  }
  return acc;
}

namespace {

struct CaloricCase {
  GradientFunction dh1;  // gradient of the cut-off positive part
  GradientFunction dh2;
  std::function<double(const Point&, double)> h1, h2;
};

// Gradient of zeta * (g . (x - c))_+- for a linear directional derivative.
CaloricCase linear_split(int dim, const Vec& g, const Point& c, const CutoffProfile& zeta) {
  auto lin = [=](const Point& x) { return g[0] * (x[0] - c[0]) + (dim == 2 ? g[1] * (x[1] - c[1]) : 0.0); };
  auto grad = [=](int sign) {
    return [=](const Point& x, double) -> Vec {
      const double l = sign * lin(x);
      if (l <= 0) return {0.0, 0.0};
      const CutoffValue z = cutoff_eval(zeta, x);
      return {z.value * sign * g[0] + l * z.gradient[0], z.value * sign * g[1] + l * z.gradient[1]};
    };
  };
  auto part = [=](int sign) { return [=](const Point& x, double) { return std::max(sign * lin(x), 0.0); }; };
  return {grad(+1), grad(-1), part(+1), part(-1)};
}

// ||h||^2 over B_2R(x0) x (0, t0], by tensor Simpson (h is time independent here).
double analytic_norm2(int dim, const std::function<double(const Point&, double)>& h, const ProbePoint& z0) {
  const double R2 = 2 * z0.R();
  const int m = 400;
  double acc = 0;
  const double step = 2 * R2 / m;
  const int jn = dim == 2 ? m : 0;
  for (int j = 0; j <= jn; ++j)
    for (int i = 0; i <= m; ++i) {
      const Point x{z0.x0[0] - R2 + i * step, dim == 2 ? z0.x0[1] - R2 + j * step : 0.0};
      const double d = std::hypot(x[0] - z0.x0[0], x[1] - z0.x0[1]);
      if (d > R2) continue;
      const double v = h(x, z0.t0);
      acc += v * v;
    }
  return acc * std::pow(step, dim) * z0.t0;
}

}  // namespace

double calibrate_remainder_constant(int dim) {
  if (dim != 1 && dim != 2) throw ConfigError("calibration is available for n = 1, 2");
  const double R = 0.5;
  const ProbePoint z0{{0.0, 0.0}, R * R};
  const CutoffProfile zeta{dim, z0.x0, R};
  std::vector<std::pair<Vec, Point>> cases;  // (gradient of D_e u, zero line offset)
  for (double off : {0.0, 0.1, 0.25}) cases.push_back({{2.0, 0.0}, {off * R, 0.0}});
  if (dim == 2) {
    for (double off : {0.0, 0.25}) cases.push_back({{0.0, 1.0}, {0.0, off * R}});
    cases.push_back({{std::sqrt(0.5), std::sqrt(0.5)}, {0.0, 0.0}});
  }
  double N = 0;
  for (const auto& [grad, c] : cases) {
    const CaloricCase cc = linear_split(dim, grad, c, zeta);
    auto phi = [&](double r) {
      return analytic_energy(dim, cc.dh1, z0, r, dim == 2 ? 121 : 241, 64) *
             analytic_energy(dim, cc.dh2, z0, r, dim == 2 ? 121 : 241, 64) / std::pow(r, 4);
    };
    const double phi_R = phi(R);
    const double scale = analytic_norm2(dim, cc.h1, z0) * analytic_norm2(dim, cc.h2, z0) / std::pow(R, 2 * dim + 8);
    for (double r = R / 2; r >= R / 16 * (1 - 1e-12); r /= 2) N = std::max(N, (phi(r) - phi_R) / scale);
  }
  return N;
}

double calibrate_chain_constant(const GridSpec& spec, double t0) {
  auto grid = std::make_shared<const Grid>(spec);
  const ProbePoint z0{{0.0, 0.0}, t0};
  const double r = 2 * grid->h();
  double C = std::numeric_limits<double>::infinity();
  std::vector<std::pair<SpaceTimeFunction, std::pair<Vec, double>>> cases;
  // (u, (e, |D(D_e u)|))
  cases.push_back({[](const Point& x, double t) { return x[0] * x[0] + 2 * t; }, {{1.0, 0.0}, 2.0}});
  cases.push_back({[](const Point& x, double t) { return 3.0 - x[0] * x[0] - 2 * t; }, {{1.0, 0.0}, 2.0}});
  if (spec.dim == 2) {
    cases.push_back({[](const Point& x, double) { return x[0] * x[1]; }, {{1.0, 0.0}, 1.0}});
    cases.push_back({[](const Point& x, double t) { return x[0] * x[0] + x[1] * x[1] + 4 * t; }, {{0.0, 1.0}, 2.0}});
  }
  const CutoffProfile zeta{spec.dim, z0.x0, z0.R()};
  for (const auto& [fn, meta] : cases) {
    const SpaceTimeField u = sample_field(grid, fn, "caloric");
    const SpaceTimeField a = apply_cutoff(directional_part(u, meta.first, +1), zeta);
    const SpaceTimeField b = apply_cutoff(directional_part(u, meta.first, -1), zeta);
    const double phi = weighted_energy(a, z0, r) * weighted_energy(b, z0, r) / std::pow(r, 4);
    C = std::min(C, phi / std::pow(meta.second, 4));
  }
  return C;
}

}  // namespace parobs
