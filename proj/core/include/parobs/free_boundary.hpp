#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "parobs/grid.hpp"

namespace parobs {

enum class Label : std::uint8_t { outside = 0, pos, neg, zero_flat, zero_grad };

const char* to_string(Label l);

struct Thresholds {
  double value = 0.0;     // theta_u
  double gradient = 0.0;  // theta_g
};

// theta_u = C h^2, theta_g = C h.
Thresholds default_thresholds(const Grid& grid, double C = 3.0);

/// Per-node labels for every level; nodes outside the ball mask are
/// `outside`.
struct Classification {
  std::shared_ptr<const Grid> grid;
  Thresholds thresholds;
  std::vector<Label> labels;  // k * node_count + node

  Label at(int k, std::size_t node) const { return labels[static_cast<std::size_t>(k) * grid->node_count() + node]; }
  bool is_zero(int k, std::size_t node) const {
    const Label l = at(k, node);
    return l == Label::zero_flat || l == Label::zero_grad;
  }
};

Classification classify(const SpaceTimeField& u, const Thresholds& th);

enum class GammaKind : std::uint8_t { none = 0, degenerate, regular };  // Gamma^0 / Gamma*

struct FreeBoundaryDecomposition {
  std::shared_ptr<const Grid> grid;
  std::vector<GammaKind> kind;  // k * node_count + node
  std::vector<std::size_t> gamma_count, degenerate_count, regular_count;  // per level

  GammaKind at(int k, std::size_t node) const { return kind[static_cast<std::size_t>(k) * grid->node_count() + node]; }
  std::vector<Point> gamma_points(int k) const;
};

// Gamma: zero-labelled nodes with a POS or NEG node among their 3^n
// spatial neighbours; Gamma^0 are the ZERO_FLAT ones.
FreeBoundaryDecomposition decompose(const Classification& c);

struct LambdaHessianResult {
  double max_hessian = 0.0;  // Frobenius norm
  std::size_t nodes = 0;
  bool vacuous = true;
};

// max |D^2 u| over box-interior ZERO_FLAT nodes at distance >= 2h from Gamma
// in the same slice.
LambdaHessianResult lambda_hessian_check(const SpaceTimeField& u, const Classification& c,
                                         const FreeBoundaryDecomposition& d);

// Marks nodes of level k within `cells` grid cells (Euclidean) of Gamma.
std::vector<unsigned char> near_gamma(const FreeBoundaryDecomposition& d, int k, double cells);

// Columns: t, x0[, x1], label, gamma.
void write_decomposition_csv(std::ostream& os, const Classification& c, const FreeBoundaryDecomposition& d);

}  // namespace parobs
