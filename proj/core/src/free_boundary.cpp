#include "parobs/free_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "parobs/errors.hpp"
#include "parobs/field_io.hpp"

namespace parobs {

const char* to_string(Label l) {
  switch (l) {
    case Label::pos: return "POS";
    case Label::neg: return "NEG";
    case Label::zero_flat: return "ZERO_FLAT";
    case Label::zero_grad: return "ZERO_GRAD";
    case Label::outside: break;
  }
  return "OUTSIDE";
}

Thresholds default_thresholds(const Grid& grid, double C) {
  return {C * grid.h() * grid.h(), C * grid.h()};
}

namespace {

// Central differences where possible, one-sided on the box faces.
double gradient_norm(const Grid& g, std::span<const double> s, std::size_t n) {
  const auto i = g.multi_index(n);
  const int last = g.nodes_per_axis() - 1;
  double acc = 0;
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t st = g.stride(a);
    double d;
    if (i[a] == 0) {
      d = (s[n + st] - s[n]) / g.h();
    } else if (i[a] == last) {
      d = (s[n] - s[n - st]) / g.h();
    } else {
      d = (s[n + st] - s[n - st]) / (2 * g.h());
    }
    acc += d * d;
  }
  return std::sqrt(acc);
}

template <class F>
void for_each_neighbour(const Grid& g, std::size_t n, F&& f) {
  const auto i = g.multi_index(n);
  const int last = g.nodes_per_axis() - 1;
  const int jr = g.dim() == 2 ? 1 : 0;
  for (int dj = -jr; dj <= jr; ++dj)
    for (int di = -1; di <= 1; ++di) {
      if (di == 0 && dj == 0) continue;
      const std::array<int, 2> q{i[0] + di, i[1] + dj};
      if (q[0] < 0 || q[0] > last || (g.dim() == 2 && (q[1] < 0 || q[1] > last))) continue;
      f(g.flat(q));
    }
}

}  // namespace

Classification classify(const SpaceTimeField& u, const Thresholds& th) {
  if (!(th.value > 0) || !(th.gradient > 0)) throw ConfigError("classification thresholds must be positive");
  const Grid& g = u.grid();
  Classification c{u.grid_ptr(), th, std::vector<Label>(u.values().size(), Label::outside)};
  for (int k = 0; k < g.levels(); ++k) {
    const auto s = u.level(k);
    Label* out = c.labels.data() + static_cast<std::size_t>(k) * g.node_count();
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (!g.in_ball(n)) continue;
      if (s[n] > th.value) {
        out[n] = Label::pos;
      } else if (s[n] < -th.value) {
        out[n] = Label::neg;
      } else {
        out[n] = gradient_norm(g, s, n) <= th.gradient ? Label::zero_flat : Label::zero_grad;
      }
    }
  }
  return c;
}

std::vector<Point> FreeBoundaryDecomposition::gamma_points(int k) const {
  std::vector<Point> out;
  for (std::size_t n = 0; n < grid->node_count(); ++n)
    if (at(k, n) != GammaKind::none) out.push_back(grid->position(n));
  return out;
}

FreeBoundaryDecomposition decompose(const Classification& c) {
  const Grid& g = *c.grid;
  FreeBoundaryDecomposition d{c.grid, std::vector<GammaKind>(c.labels.size(), GammaKind::none), {}, {}, {}};
  for (int k = 0; k < g.levels(); ++k) {
    std::size_t total = 0;
    std::size_t deg = 0;
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (!c.is_zero(k, n)) continue;
      bool touches = false;
      for_each_neighbour(g, n, [&](std::size_t m) {
        const Label l = c.at(k, m);
        touches = touches || l == Label::pos || l == Label::neg;
      });
      if (!touches) continue;
      const bool flat = c.at(k, n) == Label::zero_flat;
      d.kind[static_cast<std::size_t>(k) * g.node_count() + n] = flat ? GammaKind::degenerate : GammaKind::regular;
      ++total;
      if (flat) ++deg;
    }
    d.gamma_count.push_back(total);
    d.degenerate_count.push_back(deg);
    d.regular_count.push_back(total - deg);
  }
  return d;
}

std::vector<unsigned char> near_gamma(const FreeBoundaryDecomposition& d, int k, double cells) {
  const Grid& g = *d.grid;
  std::vector<unsigned char> mark(g.node_count(), 0);
  const int reach = static_cast<int>(std::floor(cells + 1e-9));
  const int jr = g.dim() == 2 ? reach : 0;
  const int last = g.nodes_per_axis() - 1;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (d.at(k, n) == GammaKind::none) continue;
    const auto i = g.multi_index(n);
    for (int dj = -jr; dj <= jr; ++dj)
      for (int di = -reach; di <= reach; ++di) {
        if (di * di + dj * dj > cells * cells + 1e-9) continue;
        const std::array<int, 2> q{i[0] + di, i[1] + dj};
        if (q[0] < 0 || q[0] > last || (g.dim() == 2 && (q[1] < 0 || q[1] > last))) continue;
        mark[g.flat(q)] = 1;
      }
  }
  return mark;
}

LambdaHessianResult lambda_hessian_check(const SpaceTimeField& u, const Classification& c,
                                         const FreeBoundaryDecomposition& d) {
  const Grid& g = u.grid();
  LambdaHessianResult out;
  for (int k = 0; k < g.levels(); ++k) {
    // Strictly inside the 2h ball around Gamma is excluded; distance exactly 2h is kept.
    const auto close = near_gamma(d, k, 2.0 - 1e-6);
    const auto s = u.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      if (c.at(k, n) != Label::zero_flat || close[n] || d.at(k, n) != GammaKind::none) continue;
      if (!g.is_box_interior(n)) continue;
      out.max_hessian = std::max(out.max_hessian, frobenius(slice_hessian(g, s, n), g.dim()));
      ++out.nodes;
    }
  }
  out.vacuous = out.nodes == 0;
  return out;
}

void write_decomposition_csv(std::ostream& os, const Classification& c, const FreeBoundaryDecomposition& d) {
  const Grid& g = *c.grid;
  os << (g.dim() == 1 ? "t,x0,label,gamma\n" : "t,x0,x1,label,gamma\n");
  for (int k = 0; k < g.levels(); ++k)
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      const Label l = c.at(k, n);
      if (l == Label::outside) continue;
      const Point x = g.position(n);
      os << format_number(g.time(k)) << ',' << format_number(x[0]);
      if (g.dim() == 2) os << ',' << format_number(x[1]);
      const GammaKind gk = d.at(k, n);
      os << ',' << to_string(l) << ','
         << (gk == GammaKind::none ? "none" : gk == GammaKind::degenerate ? "gamma0" : "gamma_star") << '\n';
    }
}

}  // namespace parobs
