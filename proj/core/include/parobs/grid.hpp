#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace parobs {

// Spatial points, vectors and matrices carry two slots; for n = 1 the
// second component is unused and kept at zero.
using Point = std::array<double, 2>;
using Vec = std::array<double, 2>;
using Mat = std::array<std::array<double, 2>, 2>;

using SpatialFunction = std::function<double(const Point&)>;
using SpaceTimeFunction = std::function<double(const Point&, double)>;

/// Nested radii of the computational ball, as fractions of the outer radius.
/// Index order is fixed: outer ball, regularization ball, time-derivative
/// shell, probe shell, inner cylinder.
enum class Shell : std::size_t { outer = 0, regularized = 1, time_derivative = 2, probe = 3, inner = 4 };

struct GridSpec {
  int dim = 1;
  double radius = 2.0;
  double h = 0.05;
  double tau = 0.0025;
  double horizon = 0.3;
  std::vector<double> shell_fractions{1.0, 0.9, 0.8, 0.7, 0.1};

  // Throws ConfigError listing every violated invariant.
  void validate() const;
};

struct GridIndex {
  int k = 0;
  std::array<int, 2> i{0, 0};
};

/// Tensor-product space-time grid over the box [-rho, rho]^n x [0, T] with a
/// ball mask selecting |x| <= rho.
class Grid {
 public:
  explicit Grid(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  double h() const { return spec_.h; }
  double tau() const { return spec_.tau; }
  int nodes_per_axis() const { return n_axis_; }
  std::size_t node_count() const { return node_count_; }
  // Number of time levels, K + 1.
  int levels() const { return levels_; }

  double coord(int i) const { return -spec_.radius + i * spec_.h; }
  double time(int k) const { return k * spec_.tau; }
  double shell_radius(Shell s) const;

  std::size_t flat(const std::array<int, 2>& i) const;
  std::array<int, 2> multi_index(std::size_t node) const;
  Point position(std::size_t node) const;
  std::size_t stride(int axis) const { return axis == 0 ? 1 : static_cast<std::size_t>(n_axis_); }

  bool in_ball(std::size_t node) const { return mask_[node] != 0; }
  // Every index strictly between the box faces, so all 3^n stencil
  // neighbours exist.
  bool is_box_interior(std::size_t node) const;
  bool contains(const GridIndex& at) const;

  // Node index closest to a point; throws DomainError when outside the box.
  std::size_t nearest_node(const Point& x) const;
  // Time level for t; throws DomainError unless t is a level time.
  int level_of(double t) const;

  double cell_volume() const;

 private:
  GridSpec spec_;
  int n_axis_ = 0;
  int levels_ = 0;
  std::size_t node_count_ = 0;
  std::vector<unsigned char> mask_;
};

double norm(const Vec& v, int dim);
double frobenius(const Mat& m, int dim);

enum class Provenance { solved, analytic, derived };

const char* to_string(Provenance p);

/// Scalar field sampled on every node of every time level of a grid.
class SpaceTimeField {
 public:
  SpaceTimeField(std::shared_ptr<const Grid> grid, std::string name, Provenance provenance);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  const std::string& name() const { return name_; }
  Provenance provenance() const { return provenance_; }

  double operator()(int k, std::size_t node) const { return values_[offset(k) + node]; }
  double& operator()(int k, std::size_t node) { return values_[offset(k) + node]; }

  std::span<const double> level(int k) const;
  std::span<double> level(int k);
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

 private:
  std::size_t offset(int k) const { return static_cast<std::size_t>(k) * grid_->node_count(); }

  std::shared_ptr<const Grid> grid_;
  std::string name_;
  Provenance provenance_;
  std::vector<double> values_;
};

SpaceTimeField sample_field(std::shared_ptr<const Grid> grid, const SpaceTimeFunction& f, std::string name);
std::vector<double> sample_slice(const Grid& grid, const SpatialFunction& f);

// Slice-level difference operators. The node must be box-interior; callers
// that have not checked this should use the field-level versions below.
Vec slice_gradient(const Grid& grid, std::span<const double> slice, std::size_t node);
Mat slice_hessian(const Grid& grid, std::span<const double> slice, std::size_t node);
double slice_laplacian(const Grid& grid, std::span<const double> slice, std::size_t node);

/// Central differences, second order: (u[i+e_j] - u[i-e_j]) / 2h.
Vec gradient(const SpaceTimeField& field, const GridIndex& at);
/// Central second differences; mixed terms from the four-point cross.
Mat hessian(const SpaceTimeField& field, const GridIndex& at);
/// Backward difference for k >= 1, one-sided second-order stencil at k = 0.
double time_derivative(const SpaceTimeField& field, const GridIndex& at);
double time_derivative(const SpaceTimeField& field, int k, std::size_t node);
/// Discrete heat operator Delta_h u - d_t u; requires k >= 1.
double heat_residual(const SpaceTimeField& field, const GridIndex& at);

}  // namespace parobs
