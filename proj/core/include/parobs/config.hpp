#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parobs/grid.hpp"
#include "parobs/kernel.hpp"
#include "parobs/penalty.hpp"
#include "parobs/solver.hpp"

namespace parobs {

enum class ExperimentKind { solve, epsilon_ladder, monotonicity, regularity_sweep, convergence, validate };

const char* to_string(ExperimentKind k);
// Accepts the CLI subcommand names (solve, ladder, monotonicity, probe,
// convergence, validate).
ExperimentKind kind_from_command(const std::string& command);

// Frozen calibration constants; see calibrate_remainder_constant and
// calibrate_chain_constant.
double default_remainder_constant(int dim);
double default_chain_constant(int dim);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::solve;

  GridSpec grid{1, 5.0, 0.02, 0.001, 0.3, {1.0, 0.9, 0.8, 0.7, 0.1}};
  PenaltyFamily penalty{2.0, 2.0, 1e-3};

  std::string initial_profile = "hump";
  std::vector<double> initial_params{1.25, 1.0, 2.5};
  bool mollify = true;
  int mollify_quadrature = 48;

  std::string boundary_kind = "frozen";  // frozen | exact
  std::string exact_solution = "none";   // none | stationary | caloric | heat4

  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double M_bound = 20.0;
  bool validation_only = false;

  std::vector<Point> probe_x0{{0.0, 0.0}};
  std::vector<double> probe_t0{0.04, 0.09, 0.16, 0.25};
  int refinements = 3;

  double classify_C = 3.0;
  std::optional<double> monotonicity_N;
  std::optional<double> chain_C;
  double fact1_C = 1.0;

  double ladder_ratio = 1.5;
  double refine_ratio = 1.25;
  double probe_ratio = 2.0;
  double chain_factor = 3.0;
  double min_slope = 0.8;

  std::vector<double> ladder_eps{1e-2, 1e-3, 1e-4};
  std::optional<double> c_disc;

  std::string convergence_target = "heat4";  // heat4 | caloric | stationary
  std::string convergence_mode = "tau";
  int convergence_levels = 3;
  bool convergence_eps_h2 = false;
  double convergence_exclude_cells = 0.0;

  std::string field_format = "none";  // none | csv | binary

  double resolved_N() const;
  double resolved_chain_C() const;

  // Throws ConfigError listing every violation (grid, penalty, probe
  // geometry, enumerations).
  void validate() const;
};

// Parses `key = value` lines (# comments, dotted keys). Duplicate or unknown
// keys and malformed values are collected and thrown together.
ExperimentConfig parse_config(std::istream& is, ExperimentKind kind);
ExperimentConfig parse_config_file(const std::string& path, ExperimentKind kind);

// Every key with its resolved value (defaults included), sorted by key.
std::vector<std::pair<std::string, std::string>> resolved_config_entries(const ExperimentConfig& cfg);
// The same entries as `key = value` lines; parse_config accepts it back.
std::string resolved_config_text(const ExperimentConfig& cfg);

// convergence.mode split on commas.
std::vector<std::string> convergence_modes(const ExperimentConfig& cfg);

// The closed form named by exact_solution (or convergence_target); throws
// ConfigError for `none`.
SpaceTimeFunction named_solution(const std::string& name, const PenaltyFamily& pf);

// Builds the solver input: initial datum (mollified or not) and lateral data.
SolveConfig make_solve_config(const ExperimentConfig& cfg);

std::vector<ProbePoint> probe_points(const ExperimentConfig& cfg);

}  // namespace parobs
