#include "parobs/penalty.hpp"

#include <algorithm>
#include <cmath>

#include "parobs/errors.hpp"

namespace parobs {

void PenaltyFamily::validate() const {
  std::vector<std::string> errs;
  if (!(lambda_plus >= 0)) errs.push_back("penalty.lambda_plus must be non-negative");
  if (!(lambda_minus >= 0)) errs.push_back("penalty.lambda_minus must be non-negative");
  if (!(lambda_plus + lambda_minus > 0)) errs.push_back("penalty.lambda_plus + penalty.lambda_minus must be positive");
  if (!(eps > 0)) errs.push_back("penalty.eps must be positive");
  if (!errs.empty()) throw ConfigError(std::move(errs));
}

namespace {

double smoothstep(double y) { return y * y * y * (10.0 + y * (-15.0 + 6.0 * y)); }
double smoothstep_slope(double y) { return 30.0 * y * y * (1.0 - y) * (1.0 - y); }

}  // namespace

double penalty_eval(const PenaltyFamily& pf, double s) {
  if (!(pf.eps > 0)) throw ConfigError("penalty.eps must be positive");
  if (s >= pf.eps) return pf.lambda_plus;
  if (s <= -pf.eps) return -pf.lambda_minus;
  const double y = (s + pf.eps) / (2.0 * pf.eps);
  return -pf.lambda_minus + (pf.lambda_plus + pf.lambda_minus) * smoothstep(y);
}

double penalty_slope(const PenaltyFamily& pf, double s) {
  if (s >= pf.eps || s <= -pf.eps) return 0.0;
  const double y = (s + pf.eps) / (2.0 * pf.eps);
  return (pf.lambda_plus + pf.lambda_minus) * smoothstep_slope(y) / (2.0 * pf.eps);
}

double penalty_lipschitz_bound(const PenaltyFamily& pf) {
  return 15.0 * (pf.lambda_plus + pf.lambda_minus) / (16.0 * pf.eps);
}

double measured_penalty_lipschitz(const PenaltyFamily& pf, int samples) {
  const double lo = -2.0 * pf.eps;
  const double ds = 4.0 * pf.eps / (samples - 1);
  double best = 0;
  double prev = penalty_eval(pf, lo);
  for (int j = 1; j < samples; ++j) {
    const double cur = penalty_eval(pf, lo + j * ds);
    best = std::max(best, std::abs(cur - prev) / ds);
    prev = cur;
  }
  return best;
}

double exact_rhs(const PenaltyFamily& pf, double s) {
  if (s > 0) return pf.lambda_plus;
  if (s < 0) return -pf.lambda_minus;
  return 0.0;
}

namespace {

double bump(double s) { return s < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

struct Stencil {
  std::vector<Point> offsets;  // in units of the radius
  std::vector<double> weights;
};

// Trapezoid nodes on (-1, 1)^n; the bump vanishes to all orders at the
// boundary, so the rule converges spectrally for smooth integrands.
Stencil unit_stencil(int dim, int q) {
  Stencil st;
  std::vector<double> y(q);
  for (int j = 0; j < q; ++j) y[j] = -1.0 + (2.0 * j + 1.0) / q;
  if (dim == 1) {
    for (int j = 0; j < q; ++j) {
      const double w = bump(std::abs(y[j]));
      if (w > 0) {
        st.offsets.push_back({y[j], 0.0});
        st.weights.push_back(w);
      }
    }
  } else {
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        const double w = bump(std::hypot(y[a], y[b]));
        if (w > 0) {
          st.offsets.push_back({y[a], y[b]});
          st.weights.push_back(w);
        }
      }
  }
  double total = 0;
  for (double w : st.weights) total += w;
  for (double& w : st.weights) w /= total;
  return st;
}

std::vector<double> convolve(const SpatialFunction& phi, const Grid& grid, const Stencil& st, double r) {
  std::vector<double> out(grid.node_count());
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Point x = grid.position(n);
    double acc = 0;
    for (std::size_t j = 0; j < st.weights.size(); ++j) {
      const Point y{x[0] - r * st.offsets[j][0], x[1] - r * st.offsets[j][1]};
      acc += st.weights[j] * phi(y);
    }
    out[n] = acc;
  }
  return out;
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b, const Grid& grid) {
  double gap = 0;
  for (std::size_t n = 0; n < grid.node_count(); ++n)
    if (grid.in_ball(n)) gap = std::max(gap, std::abs(a[n] - b[n]));
  return gap;
}

double start_radius(const Grid& grid) {
  const auto& f = grid.spec().shell_fractions;
  return 0.5 * grid.spec().radius * (f[0] - f[1]);
}

}  // namespace

MollifiedInitial mollify_initial(const SpatialFunction& phi, double eps, const Grid& grid,
                                 const MollifyOptions& opts) {
  if (!(eps > 0)) throw ConfigError("mollification eps must be positive");
  const Stencil st = unit_stencil(grid.dim(), opts.quadrature_points);
  const std::vector<double> exact = sample_slice(grid, phi);
  const double floor = grid.h() * (1.0 - 1e-12);
  double last_gap = 0;
  const double start = start_radius(grid);
  for (double r = start; r >= floor; r *= 0.5) {
    std::vector<double> values = convolve(phi, grid, st, r);
    last_gap = max_gap(values, exact, grid);
    if (last_gap > eps) continue;
    // Bisect towards the largest certified radius below the failing one.
    double lo = r;
    double hi = std::min(2 * r, start);
    for (int it = 0; it < 24 && hi - lo > 1e-6 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      std::vector<double> trial = convolve(phi, grid, st, mid);
      const double gap = max_gap(trial, exact, grid);
      if (gap <= eps) {
        lo = mid;
        values = std::move(trial);
        last_gap = gap;
      } else {
        hi = mid;
      }
    }
    MollifiedInitial out;
    out.source = phi;
    out.eps = eps;
    out.radius = lo;
    out.certified_gap = last_gap;
    out.mollified = true;
    out.values = std::move(values);
    return out;
  }
  throw CertificationError("cannot certify sup|phi - phi_eps| <= " + std::to_string(eps) +
                           " with mollification radius >= h (last gap " + std::to_string(last_gap) + ")");
}

MollifiedInitial mollify_sampled(std::span<const double> phi, double eps, const Grid& grid) {
  if (!(eps > 0)) throw ConfigError("mollification eps must be positive");
  if (phi.size() != grid.node_count()) throw ConfigError("sampled initial datum does not match grid");
  const int n_axis = grid.nodes_per_axis();
  double last_gap = 0;
  for (double r = start_radius(grid); r >= grid.h() * (1.0 - 1e-12); r *= 0.5) {
    const int m = static_cast<int>(std::floor(r / grid.h()));
    std::vector<double> values(grid.node_count());
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      const auto i = grid.multi_index(n);
      double acc = 0;
      double wsum = 0;
      const int jmax = grid.dim() == 2 ? m : 0;
      for (int dj = -jmax; dj <= jmax; ++dj)
        for (int di = -m; di <= m; ++di) {
          const std::array<int, 2> q{i[0] + di, i[1] + dj};
          if (q[0] < 0 || q[0] >= n_axis || (grid.dim() == 2 && (q[1] < 0 || q[1] >= n_axis))) continue;
          const double w = bump(std::hypot(di, dj) * grid.h() / r);
          acc += w * phi[grid.flat(q)];
          wsum += w;
        }
      values[n] = wsum > 0 ? acc / wsum : phi[n];
    }
    double gap = 0;
    for (std::size_t n = 0; n < grid.node_count(); ++n)
      if (grid.in_ball(n)) gap = std::max(gap, std::abs(values[n] - phi[n]));
    last_gap = gap;
    if (gap <= eps) {
      MollifiedInitial out;
      out.eps = eps;
      out.radius = r;
      out.certified_gap = gap;
      out.mollified = true;
      out.values = std::move(values);
      return out;
    }
  }
  throw CertificationError("cannot certify sampled mollification within " + std::to_string(eps) +
                           " (last gap " + std::to_string(last_gap) + ")");
}

MollifiedInitial unmollified(const SpatialFunction& phi, const Grid& grid, double eps) {
  MollifiedInitial out;
  out.source = phi;
  out.eps = eps;
  out.values = sample_slice(grid, phi);
  return out;
}

MollifiedInitial resample_initial(const MollifiedInitial& base, const Grid& grid, double eps) {
  if (!base.source) throw ConfigError("initial datum has no analytic source to resample");
  return base.mollified ? mollify_initial(base.source, eps, grid) : unmollified(base.source, grid, eps);
}

}  // namespace parobs
