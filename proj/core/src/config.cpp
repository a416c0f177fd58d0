#include "parobs/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "parobs/errors.hpp"
#include "parobs/field_io.hpp"
#include "parobs/oracle.hpp"

namespace parobs {

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::epsilon_ladder: return "epsilon-ladder";
    case ExperimentKind::monotonicity: return "monotonicity";
    case ExperimentKind::regularity_sweep: return "regularity-sweep";
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::validate: return "validate";
  }
  return "?";
}

ExperimentKind kind_from_command(const std::string& command) {
  static const std::map<std::string, ExperimentKind> names{
      {"solve", ExperimentKind::solve},
      {"ladder", ExperimentKind::epsilon_ladder},
      {"epsilon-ladder", ExperimentKind::epsilon_ladder},
      {"monotonicity", ExperimentKind::monotonicity},
      {"probe", ExperimentKind::regularity_sweep},
      {"regularity-sweep", ExperimentKind::regularity_sweep},
      {"convergence", ExperimentKind::convergence},
      {"validate", ExperimentKind::validate},
  };
  const auto it = names.find(command);
  if (it == names.end()) throw ConfigError("unknown experiment '" + command + "'");
  return it->second;
}

// Measured by calibrate_remainder_constant (0 and 6.0167e-4), rounded up.
double default_remainder_constant(int dim) { return dim == 1 ? 0.0 : 6.02e-4; }

// Measured by calibrate_chain_constant on the default grids (tau / h^2 = 2.5
// in 1D, 0.64 in 2D): 0.0297595 and 0.141942, rounded down.
double default_chain_constant(int dim) { return dim == 1 ? 0.0297 : 0.141; }

double ExperimentConfig::resolved_N() const { return monotonicity_N.value_or(default_remainder_constant(grid.dim)); }
double ExperimentConfig::resolved_chain_C() const { return chain_C.value_or(default_chain_constant(grid.dim)); }

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + s + "' is not a number");
  }
  if (used != s.size()) throw ConfigError("'" + s + "' is not a number");
  if (!std::isfinite(v)) throw ConfigError("'" + s + "' is not finite");
  return v;
}

int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + s + "' is not an integer");
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + s + "' is not a boolean");
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(item));
  return out;
}

std::vector<Point> to_points(const std::string& s) {
  std::vector<Point> out;
  for (const auto& item : split(s, ';')) {
    std::istringstream is(item);
    std::vector<double> c;
    std::string tok;
    while (is >> tok) c.push_back(to_double(tok));
    if (c.empty() || c.size() > 2) throw ConfigError("point '" + item + "' needs 1 or 2 coordinates");
    out.push_back({c[0], c.size() > 1 ? c[1] : 0.0});
  }
  return out;
}

std::string show(double v) { return format_number(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

struct KeyHandler {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
KeyHandler number_key(T ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, int>) c.*m = to_int(v);
            else c.*m = to_double(v);
          },
          [m](const ExperimentConfig& c) { return std::is_same_v<T, int> ? std::to_string(static_cast<int>(c.*m)) : show(static_cast<double>(c.*m)); }};
}

KeyHandler bool_key(bool ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.*m = to_bool(v); },
          [m](const ExperimentConfig& c) { return show(c.*m); }};
}

KeyHandler string_key(std::string ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.*m = v; },
          [m](const ExperimentConfig& c) { return c.*m; }};
}

KeyHandler list_key(std::vector<double> ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, const std::string& v) { c.*m = to_list(v); },
          [m](const ExperimentConfig& c) { return show(c.*m); }};
}

// `auto` keeps the built-in default.
KeyHandler optional_key(std::optional<double> ExperimentConfig::*m, std::function<double(const ExperimentConfig&)> fallback) {
  return {[m](ExperimentConfig& c, const std::string& v) {
            if (v == "auto") c.*m = std::nullopt;
            else c.*m = to_double(v);
          },
          [m, fallback](const ExperimentConfig& c) {
            return (c.*m).has_value() ? show(*(c.*m)) : (fallback ? show(fallback(c)) : std::string("auto"));
          }};
}

const std::map<std::string, KeyHandler>& key_table() {
  static const std::map<std::string, KeyHandler> table = [] {
    std::map<std::string, KeyHandler> t;
    t["grid.dim"] = {[](ExperimentConfig& c, const std::string& v) { c.grid.dim = to_int(v); },
                     [](const ExperimentConfig& c) { return std::to_string(c.grid.dim); }};
    t["grid.radius"] = {[](ExperimentConfig& c, const std::string& v) { c.grid.radius = to_double(v); },
                        [](const ExperimentConfig& c) { return show(c.grid.radius); }};
    t["grid.h"] = {[](ExperimentConfig& c, const std::string& v) { c.grid.h = to_double(v); },
                   [](const ExperimentConfig& c) { return show(c.grid.h); }};
    t["grid.tau"] = {[](ExperimentConfig& c, const std::string& v) { c.grid.tau = to_double(v); },
                     [](const ExperimentConfig& c) { return show(c.grid.tau); }};
    t["grid.horizon"] = {[](ExperimentConfig& c, const std::string& v) { c.grid.horizon = to_double(v); },
                         [](const ExperimentConfig& c) { return show(c.grid.horizon); }};
    t["grid.shells"] = {[](ExperimentConfig& c, const std::string& v) { c.grid.shell_fractions = to_list(v); },
                        [](const ExperimentConfig& c) { return show(c.grid.shell_fractions); }};
    t["penalty.lambda_plus"] = {[](ExperimentConfig& c, const std::string& v) { c.penalty.lambda_plus = to_double(v); },
                                [](const ExperimentConfig& c) { return show(c.penalty.lambda_plus); }};
    t["penalty.lambda_minus"] = {
        [](ExperimentConfig& c, const std::string& v) { c.penalty.lambda_minus = to_double(v); },
        [](const ExperimentConfig& c) { return show(c.penalty.lambda_minus); }};
    t["penalty.eps"] = {[](ExperimentConfig& c, const std::string& v) { c.penalty.eps = to_double(v); },
                        [](const ExperimentConfig& c) { return show(c.penalty.eps); }};
    t["initial.profile"] = string_key(&ExperimentConfig::initial_profile);
    t["initial.params"] = list_key(&ExperimentConfig::initial_params);
    t["initial.mollify"] = bool_key(&ExperimentConfig::mollify);
    t["initial.quadrature"] = number_key(&ExperimentConfig::mollify_quadrature);
    t["boundary.kind"] = string_key(&ExperimentConfig::boundary_kind);
    t["boundary.exact"] = string_key(&ExperimentConfig::exact_solution);
    t["solver.newton_tol"] = number_key(&ExperimentConfig::newton_tol);
    t["solver.newton_max_iter"] = number_key(&ExperimentConfig::newton_max_iter);
    t["solver.M"] = number_key(&ExperimentConfig::M_bound);
    t["solver.validation_only"] = bool_key(&ExperimentConfig::validation_only);
    t["probe.x0"] = {[](ExperimentConfig& c, const std::string& v) { c.probe_x0 = to_points(v); },
                     [](const ExperimentConfig& c) {
                       std::string s;
                       for (std::size_t i = 0; i < c.probe_x0.size(); ++i) {
                         s += i ? "; " : "";
                         s += show(c.probe_x0[i][0]);
                         if (c.grid.dim == 2) s += " " + show(c.probe_x0[i][1]);
                       }
                       return s;
                     }};
    t["probe.t0"] = list_key(&ExperimentConfig::probe_t0);
    t["probe.refinements"] = number_key(&ExperimentConfig::refinements);
    t["classify.C"] = number_key(&ExperimentConfig::classify_C);
    t["monotonicity.N"] = optional_key(&ExperimentConfig::monotonicity_N,
                                       [](const ExperimentConfig& c) { return c.resolved_N(); });
    t["chain.C"] = optional_key(&ExperimentConfig::chain_C, [](const ExperimentConfig& c) { return c.resolved_chain_C(); });
    t["fact1.C"] = number_key(&ExperimentConfig::fact1_C);
    t["checks.ladder_ratio"] = number_key(&ExperimentConfig::ladder_ratio);
    t["checks.refine_ratio"] = number_key(&ExperimentConfig::refine_ratio);
    t["checks.probe_ratio"] = number_key(&ExperimentConfig::probe_ratio);
    t["checks.chain_factor"] = number_key(&ExperimentConfig::chain_factor);
    t["checks.min_slope"] = number_key(&ExperimentConfig::min_slope);
    t["ladder.eps"] = list_key(&ExperimentConfig::ladder_eps);
    t["ladder.c_disc"] = optional_key(&ExperimentConfig::c_disc, nullptr);
    t["convergence.target"] = string_key(&ExperimentConfig::convergence_target);
    t["convergence.mode"] = string_key(&ExperimentConfig::convergence_mode);
    t["convergence.levels"] = number_key(&ExperimentConfig::convergence_levels);
    t["convergence.eps_h2"] = bool_key(&ExperimentConfig::convergence_eps_h2);
    t["convergence.exclude_cells"] = number_key(&ExperimentConfig::convergence_exclude_cells);
    t["output.fields"] = string_key(&ExperimentConfig::field_format);
    return t;
  }();
  return table;
}

template <class E, class F>
void collect(std::vector<std::string>& out, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    out.insert(out.end(), e.violations().begin(), e.violations().end());
  } catch (const E& e) {
    out.emplace_back(e.what());
  }
}

bool one_of(const std::string& v, std::initializer_list<const char*> allowed) {
  return std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return v == a; });
}

}  // namespace

std::vector<std::string> convergence_modes(const ExperimentConfig& cfg) { return split(cfg.convergence_mode, ','); }

void ExperimentConfig::validate() const {
  std::vector<std::string> v;
  bool grid_ok = true;
  {
    const auto before = v.size();
    collect<Error>(v, [&] { grid.validate(); });
    grid_ok = v.size() == before;
  }
  collect<Error>(v, [&] { penalty.validate(); });
  const auto names = profile_names();
  if (std::find(names.begin(), names.end(), initial_profile) == names.end())
    v.push_back("initial.profile: unknown profile '" + initial_profile + "'");
  else
    collect<Error>(v, [&] { (void)parobs::initial_profile(initial_profile, initial_params); });
  if (mollify_quadrature < 2) v.push_back("initial.quadrature must be at least 2");
  if (!one_of(boundary_kind, {"frozen", "exact"})) v.push_back("boundary.kind must be frozen or exact");
  if (!one_of(exact_solution, {"none", "stationary", "caloric", "heat4"}))
    v.push_back("boundary.exact must be none, stationary, caloric or heat4");
  if (boundary_kind == "exact" && exact_solution == "none") v.push_back("boundary.kind = exact needs boundary.exact");
  if (!(newton_tol > 0)) v.push_back("solver.newton_tol must be positive");
  if (newton_max_iter < 1) v.push_back("solver.newton_max_iter must be at least 1");
  if (!(M_bound > 0)) v.push_back("solver.M must be positive");
  if (refinements < 1 || refinements > 4) v.push_back("probe.refinements must be between 1 and 4");
  if (!(classify_C > 0)) v.push_back("classify.C must be positive");
  if (monotonicity_N && *monotonicity_N < 0) v.push_back("monotonicity.N must be non-negative");
  if (chain_C && !(*chain_C > 0)) v.push_back("chain.C must be positive");
  if (!(fact1_C >= 0)) v.push_back("fact1.C must be non-negative");
  for (const auto& [name, r] : {std::pair{"checks.ladder_ratio", ladder_ratio}, std::pair{"checks.refine_ratio", refine_ratio},
                                std::pair{"checks.probe_ratio", probe_ratio}, std::pair{"checks.chain_factor", chain_factor}})
    if (!(r >= 1)) v.push_back(std::string(name) + " must be at least 1");
  if (ladder_eps.size() < 2) v.push_back("ladder.eps needs at least two entries");
  for (std::size_t j = 0; j < ladder_eps.size(); ++j) {
    if (!(ladder_eps[j] > 0)) v.push_back("ladder.eps entries must be positive");
    if (j > 0 && !(ladder_eps[j] < ladder_eps[j - 1])) v.push_back("ladder.eps must be strictly decreasing");
  }
  if (c_disc && *c_disc < 0) v.push_back("ladder.c_disc must be non-negative");
  if (!one_of(convergence_target, {"heat4", "caloric", "stationary"}))
    v.push_back("convergence.target must be heat4, caloric or stationary");
  for (const auto& m : convergence_modes(*this))
    if (!one_of(m, {"tau", "h", "parabolic"})) v.push_back("convergence.mode entries must be tau, h or parabolic");
  if (convergence_levels < 3) v.push_back("convergence.levels must be at least 3");
  if (convergence_exclude_cells < 0) v.push_back("convergence.exclude_cells must be non-negative");
  if (!one_of(field_format, {"none", "csv", "binary"})) v.push_back("output.fields must be none, csv or binary");

  if (grid.dim == 1)
    for (const auto& p : probe_x0)
      if (p[1] != 0) v.push_back("probe.x0: two coordinates given for a 1D grid");
  if (probe_x0.empty()) v.push_back("probe.x0 needs at least one point");
  if (probe_t0.empty()) v.push_back("probe.t0 needs at least one time");
  const bool uses_probes = kind == ExperimentKind::monotonicity || kind == ExperimentKind::regularity_sweep;
  if (grid_ok && uses_probes) {
    const Grid g(grid);
    for (const auto& x0 : probe_x0)
      for (double t0 : probe_t0) {
        try {
          validate_probe(g, {x0, t0});
        } catch (const GeometryError& e) {
          std::ostringstream os;
          os << "probe (x0 = " << format_number(x0[0]);
          if (grid.dim == 2) os << " " << format_number(x0[1]);
          os << ", t0 = " << format_number(t0) << "): " << e.what();
          v.push_back(os.str());
        }
      }
  }
  if (!v.empty()) throw ConfigError(v);
}

ExperimentConfig parse_config(std::istream& is, ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (kind == ExperimentKind::solve) cfg.field_format = "csv";
  std::vector<std::string> errors;
  std::set<std::string> seen;
  const auto& table = key_table();
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected `key = value`");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = table.find(key);
    if (it == table.end()) {
      errors.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    try {
      it->second.set(cfg, value);
    } catch (const ConfigError& e) {
      errors.push_back(where + key + ": " + e.what());
    }
  }
  if (errors.empty()) {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.violations().begin(), e.violations().end());
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, kind);
}

std::vector<std::pair<std::string, std::string>> resolved_config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("experiment.kind", to_string(cfg.kind));
  for (const auto& [key, handler] : key_table()) out.emplace_back(key, handler.get(cfg));
  return out;
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : resolved_config_entries(cfg)) s += k + " = " + v + "\n";
  return s;
}

SpaceTimeFunction named_solution(const std::string& name, const PenaltyFamily& pf) {
  if (name == "stationary") return ExactSolution::stationary(pf.lambda_plus, pf.lambda_minus).eval;
  if (name == "caloric") return ExactSolution::caloric(standard_caloric()).eval;
  if (name == "heat4") return heat_polynomial4;
  throw ConfigError("no closed-form solution named '" + name + "'");
}

SolveConfig make_solve_config(const ExperimentConfig& cfg) {
  SolveConfig s;
  s.grid = cfg.grid;
  s.penalty = cfg.penalty;
  s.newton_tol = cfg.newton_tol;
  s.newton_max_iter = cfg.newton_max_iter;
  s.M_bound = cfg.M_bound;
  s.validation_only = cfg.validation_only;
  const Grid grid(cfg.grid);
  const SpatialFunction phi = initial_profile(cfg.initial_profile, cfg.initial_params);
  s.initial = cfg.mollify ? mollify_initial(phi, cfg.penalty.eps, grid, {cfg.mollify_quadrature})
                          : unmollified(phi, grid, cfg.penalty.eps);
  if (cfg.boundary_kind == "exact") {
    s.lateral_bc.kind = LateralBoundary::Kind::exact;
    s.lateral_bc.exact = named_solution(cfg.exact_solution, cfg.penalty);
  }
  return s;
}

std::vector<ProbePoint> probe_points(const ExperimentConfig& cfg) {
  std::vector<ProbePoint> out;
  for (const auto& x0 : cfg.probe_x0)
    for (double t0 : cfg.probe_t0) out.push_back({x0, t0});
  return out;
}

}  // namespace parobs
