#include "parobs/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parobs/errors.hpp"

namespace parobs {

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error([&] {
        std::ostringstream os;
        for (std::size_t j = 0; j < violations.size(); ++j) os << (j ? "; " : "") << violations[j];
        return os.str();
      }()),
      violations_(std::move(violations)) {}

namespace {

bool is_integer_ratio(double num, double den, long& out) {
  const double q = num / den;
  const double r = std::round(q);
  out = static_cast<long>(r);
  return std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q));
}

}  // namespace

void GridSpec::validate() const {
  std::vector<std::string> errs;
  if (dim != 1 && dim != 2) errs.push_back("grid.dim must be 1 or 2");
  if (!(radius > 0)) errs.push_back("grid.radius must be positive");
  if (!(h > 0)) errs.push_back("grid.h must be positive");
  if (!(tau > 0)) errs.push_back("grid.tau must be positive");
  if (!(horizon > 0)) errs.push_back("grid.horizon must be positive");
  long q = 0;
  if (radius > 0 && h > 0 && !is_integer_ratio(radius, h, q))
    errs.push_back("grid.radius / grid.h is not an integer");
  if (horizon > 0 && tau > 0 && !is_integer_ratio(horizon, tau, q))
    errs.push_back("grid.horizon / grid.tau is not an integer");
  if (shell_fractions.size() != 5) {
    errs.push_back("grid.shells must list exactly 5 fractions");
  } else {
    for (std::size_t j = 0; j < shell_fractions.size(); ++j) {
      const double f = shell_fractions[j];
      if (!(f > 0 && f <= 1)) errs.push_back("grid.shells entries must lie in (0, 1]");
      if (j > 0 && !(f < shell_fractions[j - 1])) errs.push_back("grid.shells must be strictly decreasing");
    }
  }
  if (!errs.empty()) throw ConfigError(std::move(errs));
}

Grid::Grid(GridSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  long half = 0;
  long steps = 0;
  is_integer_ratio(spec_.radius, spec_.h, half);
  is_integer_ratio(spec_.horizon, spec_.tau, steps);
  n_axis_ = static_cast<int>(2 * half + 1);
  levels_ = static_cast<int>(steps + 1);
  node_count_ = spec_.dim == 1 ? static_cast<std::size_t>(n_axis_)
                               : static_cast<std::size_t>(n_axis_) * static_cast<std::size_t>(n_axis_);
  mask_.resize(node_count_);
  const double r2 = spec_.radius * spec_.radius * (1.0 + 1e-12);
  for (std::size_t node = 0; node < node_count_; ++node) {
    const Point x = position(node);
    mask_[node] = (x[0] * x[0] + x[1] * x[1] <= r2) ? 1 : 0;
  }
}

double Grid::shell_radius(Shell s) const {
  return spec_.radius * spec_.shell_fractions[static_cast<std::size_t>(s)];
}

std::size_t Grid::flat(const std::array<int, 2>& i) const {
  return spec_.dim == 1 ? static_cast<std::size_t>(i[0])
                        : static_cast<std::size_t>(i[0]) + static_cast<std::size_t>(n_axis_) * i[1];
}

std::array<int, 2> Grid::multi_index(std::size_t node) const {
  if (spec_.dim == 1) return {static_cast<int>(node), 0};
  return {static_cast<int>(node % n_axis_), static_cast<int>(node / n_axis_)};
}

Point Grid::position(std::size_t node) const {
  const auto i = multi_index(node);
  return spec_.dim == 1 ? Point{coord(i[0]), 0.0} : Point{coord(i[0]), coord(i[1])};
}

bool Grid::is_box_interior(std::size_t node) const {
  const auto i = multi_index(node);
  for (int a = 0; a < spec_.dim; ++a)
    if (i[a] < 1 || i[a] > n_axis_ - 2) return false;
  return true;
}

bool Grid::contains(const GridIndex& at) const {
  if (at.k < 0 || at.k >= levels_) return false;
  for (int a = 0; a < spec_.dim; ++a)
    if (at.i[a] < 0 || at.i[a] >= n_axis_) return false;
  return true;
}

std::size_t Grid::nearest_node(const Point& x) const {
  std::array<int, 2> i{0, 0};
  for (int a = 0; a < spec_.dim; ++a) {
    const long j = std::lround((x[a] + spec_.radius) / spec_.h);
    if (j < 0 || j >= n_axis_) throw DomainError("point outside the grid box");
    i[a] = static_cast<int>(j);
  }
  return flat(i);
}

int Grid::level_of(double t) const {
  const double q = t / spec_.tau;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-7 * std::max(1.0, q) || r < 0 || r >= levels_)
    throw DomainError("time " + std::to_string(t) + " is not a grid level");
  return static_cast<int>(r);
}

double Grid::cell_volume() const { return spec_.dim == 1 ? spec_.h : spec_.h * spec_.h; }

double norm(const Vec& v, int dim) {
  double s = 0;
  for (int a = 0; a < dim; ++a) s += v[a] * v[a];
  return std::sqrt(s);
}

double frobenius(const Mat& m, int dim) {
  double s = 0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) s += m[a][b] * m[a][b];
  return std::sqrt(s);
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::solved: return "solved";
    case Provenance::analytic: return "analytic";
    case Provenance::derived: return "derived";
  }
  return "unknown";
}

SpaceTimeField::SpaceTimeField(std::shared_ptr<const Grid> grid, std::string name, Provenance provenance)
    : grid_(std::move(grid)), name_(std::move(name)), provenance_(provenance) {
  values_.assign(grid_->node_count() * static_cast<std::size_t>(grid_->levels()), 0.0);
}

std::span<const double> SpaceTimeField::level(int k) const {
  return {values_.data() + offset(k), grid_->node_count()};
}

std::span<double> SpaceTimeField::level(int k) { return {values_.data() + offset(k), grid_->node_count()}; }

bool SpaceTimeField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

SpaceTimeField sample_field(std::shared_ptr<const Grid> grid, const SpaceTimeFunction& f, std::string name) {
  SpaceTimeField out(grid, std::move(name), Provenance::analytic);
  for (int k = 0; k < grid->levels(); ++k) {
    auto slice = out.level(k);
    const double t = grid->time(k);
    for (std::size_t n = 0; n < grid->node_count(); ++n) slice[n] = f(grid->position(n), t);
  }
  return out;
}

std::vector<double> sample_slice(const Grid& grid, const SpatialFunction& f) {
  std::vector<double> out(grid.node_count());
  for (std::size_t n = 0; n < grid.node_count(); ++n) out[n] = f(grid.position(n));
  return out;
}

Vec slice_gradient(const Grid& grid, std::span<const double> u, std::size_t node) {
  Vec g{0.0, 0.0};
  const double inv = 0.5 / grid.h();
  for (int a = 0; a < grid.dim(); ++a) {
    const std::size_t s = grid.stride(a);
    g[a] = (u[node + s] - u[node - s]) * inv;
  }
  return g;
}

Mat slice_hessian(const Grid& grid, std::span<const double> u, std::size_t node) {
  Mat m{};
  const double inv2 = 1.0 / (grid.h() * grid.h());
  for (int a = 0; a < grid.dim(); ++a) {
    const std::size_t s = grid.stride(a);
    m[a][a] = (u[node + s] - 2.0 * u[node] + u[node - s]) * inv2;
  }
  if (grid.dim() == 2) {
    const std::size_t sx = grid.stride(0);
    const std::size_t sy = grid.stride(1);
    const double mixed =
        (u[node + sx + sy] - u[node + sx - sy] - u[node - sx + sy] + u[node - sx - sy]) * 0.25 * inv2;
    m[0][1] = mixed;
    m[1][0] = mixed;
  }
  return m;
}

double slice_laplacian(const Grid& grid, std::span<const double> u, std::size_t node) {
  double lap = 0;
  for (int a = 0; a < grid.dim(); ++a) {
    const std::size_t s = grid.stride(a);
    lap += u[node + s] - 2.0 * u[node] + u[node - s];
  }
  return lap / (grid.h() * grid.h());
}

namespace {

std::size_t checked_interior(const SpaceTimeField& field, const GridIndex& at) {
  const Grid& g = field.grid();
  if (!g.contains(at)) throw DomainError("grid index out of bounds");
  const std::size_t node = g.flat(at.i);
  if (!g.is_box_interior(node)) throw DomainError("difference stencil requires an interior node");
  return node;
}

}  // namespace

Vec gradient(const SpaceTimeField& field, const GridIndex& at) {
  const std::size_t node = checked_interior(field, at);
  return slice_gradient(field.grid(), field.level(at.k), node);
}

Mat hessian(const SpaceTimeField& field, const GridIndex& at) {
  const std::size_t node = checked_interior(field, at);
  return slice_hessian(field.grid(), field.level(at.k), node);
}

double time_derivative(const SpaceTimeField& field, int k, std::size_t node) {
  const Grid& g = field.grid();
  if (k >= 1) return (field(k, node) - field(k - 1, node)) / g.tau();
  if (g.levels() < 3) throw DomainError("one-sided time stencil needs three levels");
  return (-3.0 * field(0, node) + 4.0 * field(1, node) - field(2, node)) / (2.0 * g.tau());
}

double time_derivative(const SpaceTimeField& field, const GridIndex& at) {
  if (!field.grid().contains(at)) throw DomainError("grid index out of bounds");
  return time_derivative(field, at.k, field.grid().flat(at.i));
}

double heat_residual(const SpaceTimeField& field, const GridIndex& at) {
  if (at.k < 1) throw DomainError("heat residual needs a previous time level");
  const std::size_t node = checked_interior(field, at);
  return slice_laplacian(field.grid(), field.level(at.k), node) - time_derivative(field, at.k, node);
}

}  // namespace parobs
