#include "parobs/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "parobs/errors.hpp"
#include "parobs/field_io.hpp"
#include "parobs/free_boundary.hpp"
#include "parobs/kernel.hpp"
#include "parobs/oracle.hpp"
#include "parobs/penalty.hpp"
#include "parobs/regularity.hpp"
#include "parobs/solver.hpp"

namespace parobs {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

bool RunResult::pass() const {
  return !error && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int RunResult::exit_code() const { return error ? 2 : (pass() ? 0 : 1); }

std::vector<Check> RunResult::checks_for(const std::string& statement) const {
  std::vector<Check> out;
  for (const auto& c : checks)
    if (c.statement == statement) out.push_back(c);
  return out;
}

std::string error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const SolverError*>(&e)) return "solver";
  if (dynamic_cast<const GeometryError*>(&e)) return "geometry";
  if (dynamic_cast<const DomainError*>(&e)) return "domain";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  if (dynamic_cast<const CertificationError*>(&e)) return "certification";
  return "internal";
}

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) { return format_number(v); }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

// Short form for labels and check names; tables use num().
std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string point_label(const Point& x, int dim) { return dim == 1 ? brief(x[0]) : brief(x[0]) + "_" + brief(x[1]); }

std::vector<Vec> axes(int dim) {
  if (dim == 1) return {Vec{1.0, 0.0}};
  return {Vec{1.0, 0.0}, Vec{0.0, 1.0}};
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi == 0) return 1.0;
  if (*lo <= 0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

double field_gap(const SpaceTimeField& a, const SpaceTimeField& b) {
  const Grid& g = a.grid();
  double gap = 0;
  for (int k = 0; k < g.levels(); ++k) {
    const auto sa = a.level(k);
    const auto sb = b.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n)
      if (g.in_ball(n)) gap = std::max(gap, std::abs(sa[n] - sb[n]));
  }
  return gap;
}

double max_error(const SpaceTimeField& u, const SpaceTimeFunction& exact) {
  const Grid& g = u.grid();
  double err = 0;
  for (int k = 0; k < g.levels(); ++k) {
    const auto s = u.level(k);
    for (std::size_t n = 0; n < g.node_count(); ++n)
      if (g.in_ball(n)) err = std::max(err, std::abs(s[n] - exact(g.position(n), g.time(k))));
  }
  return err;
}

// Results come back in index order whatever the worker count.
template <class F>
auto parallel_map(int n, int workers, F&& f) -> std::vector<decltype(f(0))> {
  using T = decltype(f(0));
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(n));
  const int w = std::max(1, workers);
  for (int start = 0; start < n; start += w) {
    std::vector<std::future<T>> batch;
    for (int i = start; i < std::min(n, start + w); ++i)
      batch.push_back(std::async(w > 1 ? std::launch::async : std::launch::deferred, f, i));
    for (auto& fu : batch) out.push_back(fu.get());
  }
  return out;
}

class Run {
 public:
  Run(const ExperimentConfig& cfg, const RunOptions& opts, RunResult& res) : cfg(cfg), opts(opts), res(res) {}

  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunResult& res;

  void check(std::string name, std::string statement, bool pass, double value, double bound,
             std::string detail = {}) {
    res.checks.push_back({std::move(name), std::move(statement), pass, value, bound, std::move(detail)});
  }
  void metric(std::string name, double v) { res.metrics.emplace_back(std::move(name), v); }

  template <class F>
  auto timed(const std::string& name, F&& f) {
    const auto t0 = Clock::now();
    auto out = f();
    res.timings.emplace_back(name, std::chrono::duration<double>(Clock::now() - t0).count());
    return out;
  }

  void write(const std::string& rel, const Table& t) {
    const fs::path p = opts.out_dir / rel;
    fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("cannot write " + p.string());
    write_row(os, t.header);
    for (const auto& r : t.rows) write_row(os, r);
    res.files.push_back(rel);
  }

  void write_field(const std::string& stem, const SpaceTimeField& f) {
    if (cfg.field_format == "none") return;
    const std::string rel = stem + (cfg.field_format == "csv" ? ".csv" : ".parf");
    const fs::path p = opts.out_dir / rel;
    fs::create_directories(p.parent_path());
    if (cfg.field_format == "csv") write_field_csv(p.string(), f);
    else write_field_binary(p.string(), f);
    res.files.push_back(rel);
  }

 private:
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
};

Table steps_table(const SolveReport& rep) {
  Table t{{"k", "t", "newton_iters", "fallback_sweeps"}, {}};
  const Grid& g = rep.field.grid();
  for (std::size_t j = 0; j < rep.newton_iters.size(); ++j) {
    const int k = static_cast<int>(j) + 1;
    t.add({std::to_string(k), num(g.time(k)), std::to_string(rep.newton_iters[j]),
           std::to_string(rep.fallback_sweeps[j])});
  }
  return t;
}

// ---------------------------------------------------------------- solve

void run_solve(Run& run) {
  const auto& cfg = run.cfg;
  const SolveConfig sc = run.timed("mollify", [&] { return make_solve_config(cfg); });
  const SolveReport rep = run.timed("solve", [&] { return solve(sc); });
  const Grid& g = rep.field.grid();

  run.check("sup |u| <= M + eps", "a-priori-bound", rep.m_bound_ok, rep.sup_abs, cfg.M_bound + cfg.penalty.eps);
  run.check("sup |phi - phi_eps| <= eps", "initial-data-regularization",
            sc.initial.certified_gap <= cfg.penalty.eps, sc.initial.certified_gap, cfg.penalty.eps);

  int newton = 0, sweeps = 0;
  for (int v : rep.newton_iters) newton += v;
  for (int v : rep.fallback_sweeps) sweeps += v;
  run.metric("newton_iters_total", newton);
  run.metric("fallback_sweeps_total", sweeps);
  run.metric("max_step_residual", rep.max_residual);
  run.metric("mollifier_radius", sc.initial.radius);
  run.metric("initial_time_derivative_defect", initial_time_derivative_check(rep.field, sc));

  const Classification cls = classify(rep.field, default_thresholds(g, cfg.classify_C));
  const FreeBoundaryDecomposition dec = decompose(cls);
  Table fb{{"k", "t", "gamma", "degenerate", "regular"}, {}};
  for (int k = 0; k < g.levels(); ++k)
    fb.add({std::to_string(k), num(g.time(k)), std::to_string(dec.gamma_count[k]),
            std::to_string(dec.degenerate_count[k]), std::to_string(dec.regular_count[k])});
  const LambdaHessianResult lam = lambda_hessian_check(rep.field, cls, dec);
  run.metric("coincidence_nodes", static_cast<double>(lam.nodes));
  run.metric("coincidence_max_hessian", lam.max_hessian);

  run.write("steps.csv", steps_table(rep));
  run.write("free_boundary.csv", fb);
  run.write_field("field", rep.field);
  if (cfg.field_format != "none") {
    const fs::path p = run.opts.out_dir / "decomposition.csv";
    std::ofstream os(p, std::ios::binary);
    write_decomposition_csv(os, cls, dec);
    run.res.files.push_back("decomposition.csv");
  }
}

// ---------------------------------------------------------------- ladder

// Max error of the heat part of the scheme against x1^4 + 12 x1^2 t + 12 t^2
// on the configured grid.
double discretization_constant(const ExperimentConfig& cfg) {
  SolveConfig v;
  v.grid = cfg.grid;
  v.penalty = cfg.penalty;
  v.validation_only = true;
  v.newton_tol = cfg.newton_tol;
  v.newton_max_iter = cfg.newton_max_iter;
  v.M_bound = std::numeric_limits<double>::max();
  const Grid grid(cfg.grid);
  v.initial = unmollified([](const Point& x) { return heat_polynomial4(x, 0.0); }, grid, cfg.penalty.eps);
  v.lateral_bc = {LateralBoundary::Kind::exact, heat_polynomial4};
  return max_error(solve(v).field, heat_polynomial4);
}

void run_ladder(Run& run) {
  const auto& cfg = run.cfg;
  const SolveConfig sc = make_solve_config(cfg);
  const double c_disc = cfg.c_disc ? *cfg.c_disc : run.timed("c_disc", [&] { return discretization_constant(cfg); });
  run.metric("c_disc", c_disc);
  const LadderResult lr =
      run.timed("ladder", [&] { return epsilon_limit(sc, cfg.ladder_eps, c_disc, run.opts.workers); });

  const std::size_t m = lr.eps.size();
  for (std::size_t j = 0; j < m; ++j) run.write("run_" + std::to_string(j) + "/steps.csv", steps_table(lr.reports[j]));

  Table gaps{{"eps_a", "eps_b", "gap", "bound", "pass"}, {}};
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      const double gap = field_gap(lr.reports[a].field, lr.reports[b].field);
      const double bound = lr.eps[a] + lr.eps[b] + c_disc;
      gaps.add({num(lr.eps[a]), num(lr.eps[b]), num(gap), num(bound), gap <= bound ? "1" : "0"});
      run.check("sup gap eps " + brief(lr.eps[a]) + " vs " + brief(lr.eps[b]), "regularization-gap", gap <= bound, gap,
                bound);
    }
  run.write("ladder.csv", gaps);

  const Grid& g0 = lr.reports[0].field.grid();
  Table dt{{"eps", "shell_radius", "sup_dt"}, {}};
  for (Shell s : {Shell::time_derivative, Shell::probe}) {
    const double radius = g0.shell_radius(s);
    std::vector<double> sups;
    for (std::size_t j = 0; j < m; ++j) {
      sups.push_back(sup_time_derivative(lr.reports[j].field, radius));
      dt.add({num(lr.eps[j]), num(radius), num(sups.back())});
    }
    const double r = spread(sups);
    run.check("sup |d_t u| on |x| <= " + brief(radius) + " across eps", "time-derivative-bound", r <= cfg.ladder_ratio, r,
              cfg.ladder_ratio);
  }
  run.write("ladder_time_derivative.csv", dt);
}

// ---------------------------------------------------------------- monotonicity

void run_monotonicity(Run& run) {
  const auto& cfg = run.cfg;
  const SolveConfig sc = make_solve_config(cfg);
  const SolveReport rep = run.timed("solve", [&] { return solve(sc); });
  const SpaceTimeField& u = rep.field;
  const int dim = cfg.grid.dim;

  struct Task {
    ProbePoint z0;
    Vec e;
  };
  std::vector<Task> tasks;
  for (const auto& z0 : probe_points(cfg))
    for (const auto& e : axes(dim)) tasks.push_back({z0, e});

  const ScanOptions opts{cfg.resolved_N(), 0.0};
  const auto reports = run.timed("scans", [&] {
    return parallel_map(static_cast<int>(tasks.size()), run.opts.workers, [&](int i) {
      const auto& t = tasks[static_cast<std::size_t>(i)];
      return monotonicity_scan(u, t.z0, t.e, dyadic_radii(t.z0.R(), cfg.grid.h), opts);
    });
  });

  Table rows{{"x0", "t0", "e", "r", "phi", "phi_coarse", "phi_R", "remainder"}, {}};
  Table summary{{"x0", "t0", "e", "phi_R", "remainder", "norm_plus", "norm_minus", "tolerance", "worst_violation",
                 "sign_changing", "pass"},
                {}};
  int sign_changing = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const auto& r = reports[i];
    const std::string x0 = point_label(t.z0.x0, dim);
    const std::string e = point_label(t.e, dim);
    for (std::size_t j = 0; j < r.radii.size(); ++j)
      rows.add({x0, num(t.z0.t0), e, num(r.radii[j]), num(r.phi[j]), num(r.phi_coarse[j]), num(r.phi_R),
                num(r.remainder)});
    const bool changes = r.norm_plus > 0 && r.norm_minus > 0;
    sign_changing += changes;
    summary.add({x0, num(t.z0.t0), e, num(r.phi_R), num(r.remainder), num(r.norm_plus), num(r.norm_minus),
                 num(r.tolerance), num(r.worst_violation), changes ? "1" : "0", r.pass() ? "1" : "0"});
    run.check("monotonicity x0=" + x0 + " t0=" + brief(t.z0.t0) + " e=" + e, "almost-monotonicity", r.pass(),
              r.worst_violation, r.tolerance, changes ? "sign-changing" : "one-signed");
  }
  run.metric("sign_changing_scans", sign_changing);
  run.write("monotonicity.csv", rows);
  run.write("monotonicity_summary.csv", summary);
}

// ---------------------------------------------------------------- regularity sweep

struct ProbeRow {
  ProbePoint z0;
  GradientGap gap;
  double hessian_energy = 0.0;
  std::vector<double> phi_R;      // per axis
  std::vector<Vec> directions;    // orthogonal to Du(z0), or every axis when Du(z0) vanishes
  std::vector<SplitNorms> norms;  // per admissible direction
};

struct ChainRow {
  ProbePoint z0;
  bool evaluated = false;
  std::string reason;
  HessianChain chain;
};

struct LevelAnalysis {
  double h = 0.0, tau = 0.0;
  SupScan sup;
  double holder = 0.0;
  double sup_dt_outer = 0.0, sup_dt_probe = 0.0;
  double equation_defect = 0.0;
  double initial_defect = 0.0;
  std::vector<ProbeRow> probes;
  std::vector<ChainRow> chains;
};

LevelAnalysis analyze_level(const ExperimentConfig& cfg, const SolveConfig& sc, const SpaceTimeField& u) {
  const Grid& g = u.grid();
  LevelAnalysis a;
  a.h = g.h();
  a.tau = g.tau();
  const Thresholds th = default_thresholds(g, cfg.classify_C);
  const FreeBoundaryDecomposition dec = decompose(classify(u, th));
  const double inner = g.shell_radius(Shell::inner);
  a.sup = theorem_sup_scan(u, inner, dec);
  a.holder = holder_half_check(u, inner);
  a.sup_dt_outer = sup_time_derivative(u, g.shell_radius(Shell::time_derivative));
  a.sup_dt_probe = sup_time_derivative(u, g.shell_radius(Shell::probe));
  a.equation_defect =
      equation_consistency(u, cfg.penalty, std::max(th.value, cfg.penalty.eps), g.shell_radius(Shell::probe));
  a.initial_defect = initial_time_derivative_check(u, sc);

  const auto phi = u.level(0);
  for (const auto& z0 : probe_points(cfg)) {
    ProbeRow row;
    row.z0 = z0;
    row.gap = gradient_gap(u, phi, z0);
    row.hessian_energy = weighted_hessian_energy(u, z0);
    for (const auto& e : axes(g.dim())) row.phi_R.push_back(phi_profile(u, z0, e, {z0.R()})[0]);
    row.directions = choose_directions(u, z0, th.gradient).e;
    for (const auto& e : row.directions) row.norms.push_back(split_norms(u, z0, e));
    a.probes.push_back(std::move(row));

    ChainRow c;
    c.z0 = z0;
    try {
      c.chain = hessian_bound_chain(u, z0, {cfg.resolved_chain_C(), th, cfg.penalty});
      c.evaluated = true;
    } catch (const PreconditionError& e) {
      c.reason = e.what();
    }
    a.chains.push_back(std::move(c));
  }
  return a;
}

void pairing_battery(Run& run, const SpaceTimeField& solved) {
  const auto& cfg = run.cfg;
  const auto grid = solved.grid_ptr();
  const int dim = grid->dim();
  const double scale = cfg.fact1_C * (grid->h() + grid->tau());
  const auto bumps = bump_battery(*grid);

  struct Source {
    std::string name;
    const SpaceTimeField* field;
  };
  const SpaceTimeField stationary = sample_field(
      grid, [&](const Point& x, double) { return stationary_two_phase(x, cfg.penalty.lambda_plus, cfg.penalty.lambda_minus); },
      "stationary");
  const SpaceTimeField caloric = sample_field(grid, ExactSolution::caloric(standard_caloric()).eval, "caloric");
  const std::vector<Source> sources{{"solved", &solved}, {"stationary", &stationary}, {"caloric", &caloric}};

  Table t{{"field", "e", "sign", "bump", "pairing", "bound"}, {}};
  for (const auto& src : sources)
    for (const auto& e : axes(dim))
      for (int sign : {1, -1}) {
        const SpaceTimeField part = directional_part(*src.field, e, sign);
        double worst = std::numeric_limits<double>::infinity();
        double worst_bound = 0;
        for (std::size_t b = 0; b < bumps.size(); ++b) {
          const double p = weak_pairing(part, bumps[b]);
          const double bound = -scale * bumps[b].c2_norm(dim);
          t.add({src.name, point_label(e, dim), sign > 0 ? "plus" : "minus", std::to_string(b), num(p), num(bound)});
          if (p - bound < worst) {
            worst = p - bound;
            worst_bound = bound;
          }
        }
        run.check("pairing " + src.name + " e=" + point_label(e, dim) + (sign > 0 ? " plus" : " minus"),
                  "subcaloric-directional-parts", worst >= 0, worst + worst_bound, worst_bound);
      }
  run.write("pairing.csv", t);
}

void run_regularity_sweep(Run& run) {
  const auto& cfg = run.cfg;
  const int dim = cfg.grid.dim;
  const int L = cfg.refinements;
  const SolveConfig base = run.timed("mollify", [&] { return make_solve_config(cfg); });

  std::vector<SolveConfig> configs;
  for (int l = 0; l < L; ++l) {
    SolveConfig c = base;
    const double f = std::pow(2.0, l);
    c.grid.h = base.grid.h / f;
    c.grid.tau = base.grid.tau / (f * f);
    if (l > 0) c.initial = resample_initial(base.initial, Grid(c.grid), c.penalty.eps);
    configs.push_back(std::move(c));
  }
  const auto reports = run.timed("solves", [&] {
    return parallel_map(L, run.opts.workers, [&](int l) { return solve(configs[static_cast<std::size_t>(l)]); });
  });
  const auto levels = run.timed("analysis", [&] {
    return parallel_map(L, run.opts.workers, [&](int l) {
      return analyze_level(cfg, configs[static_cast<std::size_t>(l)], reports[static_cast<std::size_t>(l)].field);
    });
  });

  // Per-level tables, then the aggregate in level order.
  const std::vector<std::string> probe_header{"level", "x0", "t0", "R", "e", "sup_gap", "initial_gap",
                                              "hessian_energy_over_R2", "phi_R"};
  const std::vector<std::string> norm_header{"level", "x0", "t0", "R", "e", "norm_plus", "norm_minus"};
  const std::vector<std::string> refine_header{"level", "h", "tau", "sup_hessian", "sup_hessian_near_gamma",
                                               "excluded_nodes", "sup_dt_inner", "holder", "sup_dt_time_shell",
                                               "sup_dt_probe_shell", "equation_defect", "initial_defect"};
  Table all_probes{probe_header, {}}, all_refine{refine_header, {}}, all_norms{norm_header, {}};
  Table chains{{"level", "x0", "t0", "status", "assembled", "direct", "d_nunu"}, {}};
  for (int l = 0; l < L; ++l) {
    const auto& a = levels[static_cast<std::size_t>(l)];
    Table probes{probe_header, {}}, refine{refine_header, {}}, norms{norm_header, {}};
    refine.add({std::to_string(l), num(a.h), num(a.tau), num(a.sup.hessian), num(a.sup.hessian_near_gamma),
                std::to_string(a.sup.excluded), num(a.sup.time_derivative), num(a.holder), num(a.sup_dt_outer),
                num(a.sup_dt_probe), num(a.equation_defect), num(a.initial_defect)});
    for (const auto& p : a.probes)
      for (int j = 0; j < dim; ++j)
        probes.add({std::to_string(l), point_label(p.z0.x0, dim), num(p.z0.t0), num(p.z0.R()), std::to_string(j),
                    num(p.gap.sup_gap), num(p.gap.initial_gap), num(p.hessian_energy / p.z0.t0), num(p.phi_R[j])});
    for (const auto& p : a.probes)
      for (std::size_t j = 0; j < p.directions.size(); ++j)
        norms.add({std::to_string(l), point_label(p.z0.x0, dim), num(p.z0.t0), num(p.z0.R()),
                   point_label(p.directions[j], dim), num(p.norms[j].plus), num(p.norms[j].minus)});
    for (const auto& c : a.chains)
      chains.add({std::to_string(l), point_label(c.z0.x0, dim), num(c.z0.t0), c.evaluated ? "evaluated" : "skipped",
                  num(c.chain.assembled), num(c.chain.direct), num(c.chain.d_nunu)});
    const std::string dir = "level_" + std::to_string(l) + "/";
    run.write(dir + "refinement.csv", refine);
    run.write(dir + "probes.csv", probes);
    run.write(dir + "norms.csv", norms);
    all_norms.rows.insert(all_norms.rows.end(), norms.rows.begin(), norms.rows.end());
    all_refine.rows.insert(all_refine.rows.end(), refine.rows.begin(), refine.rows.end());
    all_probes.rows.insert(all_probes.rows.end(), probes.rows.begin(), probes.rows.end());
  }
  run.write("refinement.csv", all_refine);
  run.write("probes.csv", all_probes);
  run.write("norms.csv", all_norms);
  run.write("chain.csv", chains);

  // Scaling fits over the probe times, per level and x0.
  Table scaling{{"R", "quantity", "value", "fitted_exponent"}, {}};
  auto fit = [&](const std::string& quantity, const std::vector<double>& R, const std::vector<double>& v) {
    const bool ok = R.size() >= 2 && std::all_of(v.begin(), v.end(), [](double x) { return x > 0; });
    const double slope = ok ? loglog_slope(R, v) : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < R.size(); ++i) scaling.add({num(R[i]), quantity, num(v[i]), num(slope)});
    return slope;
  };
  const std::size_t nt = cfg.probe_t0.size();
  double initial_gap = 0;
  int norm_fits_skipped = 0;
  std::map<std::string, std::vector<double>> energy_by_x0, phi_by_x0e;
  for (int l = 0; l < L; ++l) {
    const auto& a = levels[static_cast<std::size_t>(l)];
    for (std::size_t p0 = 0; p0 < cfg.probe_x0.size(); ++p0) {
      const std::string x0 = point_label(cfg.probe_x0[p0], dim);
      const std::string tag = "/level" + std::to_string(l) + "/x0=" + x0;
      const std::size_t nd = a.probes[p0 * nt].directions.size();
      bool same_count = true;
      std::vector<double> R, gap;
      std::vector<std::vector<double>> plus(nd), minus(nd);
      for (std::size_t it = 0; it < nt; ++it) {
        const auto& p = a.probes[p0 * nt + it];
        R.push_back(p.z0.R());
        gap.push_back(p.gap.sup_gap);
        initial_gap = std::max(initial_gap, p.gap.initial_gap);
        energy_by_x0[x0].push_back(p.hessian_energy / p.z0.t0);
        for (int j = 0; j < dim; ++j) phi_by_x0e[x0 + " e" + std::to_string(j)].push_back(p.phi_R[static_cast<std::size_t>(j)]);
        same_count = same_count && p.directions.size() == nd;
        for (std::size_t j = 0; same_count && j < nd; ++j) {
          plus[j].push_back(p.norms[j].plus);
          minus[j].push_back(p.norms[j].minus);
        }
      }
      if (nt < 2) continue;
      const double s = fit("gradient_gap" + tag, R, gap);
      run.check("gradient gap slope level " + std::to_string(l) + " x0=" + x0, "gradient-near-initial-data",
                s >= cfg.min_slope, s, cfg.min_slope);
      // Directions are admissible only orthogonal to Du(z0); with none (n = 1,
      // Du(z0) != 0) or a count that changes along the ladder there is no fit.
      if (!same_count || nd == 0) {
        ++norm_fits_skipped;
        continue;
      }
      for (std::size_t j = 0; j < nd; ++j)
        for (int sgn = 0; sgn < 2; ++sgn) {
          const auto& v = sgn == 0 ? plus[j] : minus[j];
          const std::string q = std::string(sgn == 0 ? "norm_plus" : "norm_minus") + tag + "/e" + std::to_string(j);
          const double s2 = fit(q, R, v);
          if (std::isnan(s2)) {
            ++norm_fits_skipped;
            continue;
          }
          const bool ok = s2 >= dim + 3 && s2 <= dim + 5;
          run.check("directional norm exponent " + q, "directional-norm-scaling", ok, s2, dim + 4, "window [n+3, n+5]");
        }
    }
  }
  run.metric("norm_fits_skipped", norm_fits_skipped);
  run.write("scaling.csv", scaling);
  run.check("gradient gap on the t = 0 slice", "gradient-near-initial-data", initial_gap == 0.0, initial_gap, 0.0);

  for (const auto& [x0, v] : energy_by_x0) {
    const double r = spread(v);
    run.check("hessian energy / R^2 spread x0=" + x0, "weighted-hessian-energy", r <= cfg.probe_ratio, r,
              cfg.probe_ratio);
  }
  for (const auto& [key, v] : phi_by_x0e) {
    const double r = spread(v);
    run.check("Phi_e(R) spread x0=" + key, "cutoff-functional-bound", r <= cfg.probe_ratio, r, cfg.probe_ratio);
  }

  auto across = [&](auto get) {
    std::vector<double> v;
    for (const auto& a : levels) v.push_back(get(a));
    return spread(v);
  };
  const double r_hess = across([](const LevelAnalysis& a) { return a.sup.hessian; });
  const double r_dt = across([](const LevelAnalysis& a) { return a.sup.time_derivative; });
  const double r_holder = across([](const LevelAnalysis& a) { return a.holder; });
  const double r_outer = across([](const LevelAnalysis& a) { return a.sup_dt_outer; });
  const double r_probe = across([](const LevelAnalysis& a) { return a.sup_dt_probe; });
  if (L >= 2) {
    run.check("sup |D^2 u| off Gamma across refinements", "optimal-regularity", r_hess <= cfg.refine_ratio, r_hess,
              cfg.refine_ratio);
    run.check("sup |d_t u| inner cylinder across refinements", "optimal-regularity", r_dt <= cfg.refine_ratio, r_dt,
              cfg.refine_ratio);
    run.check("half-Holder quotient across refinements", "gradient-half-holder", r_holder <= cfg.refine_ratio,
              r_holder, cfg.refine_ratio);
    run.check("sup |d_t u| time-derivative shell across refinements", "time-derivative-bound",
              r_outer <= cfg.refine_ratio, r_outer, cfg.refine_ratio);
    run.check("sup |d_t u| probe shell across refinements", "time-derivative-bound", r_probe <= cfg.refine_ratio,
              r_probe, cfg.refine_ratio);
  }

  int evaluated = 0;
  for (int l = 0; l < L; ++l)
    for (const auto& c : levels[static_cast<std::size_t>(l)].chains) {
      if (!c.evaluated) continue;
      ++evaluated;
      const double ratio = c.chain.direct > 0 ? c.chain.assembled / c.chain.direct
                                              : std::numeric_limits<double>::infinity();
      const bool ok = ratio <= cfg.chain_factor && ratio >= 1.0 / cfg.chain_factor;
      run.check("hessian chain level " + std::to_string(l) + " x0=" + point_label(c.z0.x0, dim) +
                    " t0=" + brief(c.z0.t0),
                "hessian-chain", ok, ratio, cfg.chain_factor, "assembled / direct");
    }
  run.metric("chain_points_evaluated", evaluated);

  pairing_battery(run, reports[0].field);
}

// ---------------------------------------------------------------- convergence

void run_convergence(Run& run) {
  const auto& cfg = run.cfg;
  const std::string& target = cfg.convergence_target;
  const SpaceTimeFunction exact = named_solution(target, cfg.penalty);
  const bool stationary = target == "stationary";

  SolveConfig base;
  base.grid = cfg.grid;
  base.penalty = cfg.penalty;
  base.validation_only = !stationary;
  base.newton_tol = cfg.newton_tol;
  base.newton_max_iter = cfg.newton_max_iter;
  base.M_bound = cfg.M_bound;
  const Grid grid(cfg.grid);
  base.initial = unmollified([exact](const Point& x) { return exact(x, 0.0); }, grid, cfg.penalty.eps);
  base.lateral_bc = {LateralBoundary::Kind::exact, exact};

  if (stationary) {
    const SolveReport rep = run.timed("preservation", [&] { return solve(base); });
    const double dev = max_error(rep.field, exact);
    const double bound = 10 * cfg.newton_tol + cfg.grid.h * cfg.grid.h;
    run.check("stationary profile preserved over the horizon", "scheme-consistency", dev <= bound, dev, bound,
              "bound 10 newton_tol + h^2");
  }

  Table levels{{"study", "level", "h", "tau", "eps", "error"}, {}};
  Table summary{{"study", "fitted_order", "threshold", "monotone", "pass"}, {}};
  for (const auto& mode : convergence_modes(cfg)) {
    StudyOptions opts;
    opts.mode = mode;
    opts.scale_eps_with_h2 = cfg.convergence_eps_h2;
    if (stationary) opts.exclude_x1 = {0.0};
    opts.exclude_cells = cfg.convergence_exclude_cells;
    const ConvergenceStudy st =
        run.timed("study_" + mode, [&] { return convergence_study(base, cfg.convergence_levels, exact, opts); });
    const double threshold = mode == "tau" ? 0.9 : (stationary ? 1.5 : 1.8);
    for (std::size_t l = 0; l < st.levels.size(); ++l) {
      const auto& lv = st.levels[l];
      levels.add({mode, std::to_string(l), num(lv.h), num(lv.tau), num(lv.eps), num(lv.error)});
    }
    const bool ok = st.fitted_order >= threshold;
    summary.add({mode, num(st.fitted_order), num(threshold), st.monotone ? "1" : "0", ok ? "1" : "0"});
    run.check("fitted order (" + mode + ") against " + target, "scheme-consistency", ok, st.fitted_order, threshold,
              st.monotone ? "monotone decay" : "non-monotone decay");
  }
  run.write("convergence.csv", levels);
  run.write("convergence_summary.csv", summary);
}

// ---------------------------------------------------------------- validate

void run_validate(Run& run) {
  const auto& cfg = run.cfg;
  const int dim = cfg.grid.dim;

  Table kernel{{"t", "mass"}, {}};
  for (double t : {0.05, 0.1, 0.25, 0.5, 1.0}) {
    const double m = kernel_slice_mass(dim, t, cfg.grid.h, 10.0);
    kernel.add({num(t), num(m)});
    run.check("kernel mass at t = " + brief(t), "heat-kernel-normalization", std::abs(m - 1) <= 1e-6, std::abs(m - 1),
              1e-6);
  }
  run.write("kernel.csv", kernel);

  Table cal{{"h", "defect"}, {}};
  std::vector<double> hs{0.1, 0.05, 0.025}, defects;
  for (double h : hs) {
    defects.push_back(kernel_caloricity_defect(dim, h));
    cal.add({num(h), num(defects.back())});
  }
  const double order = loglog_slope(hs, defects);
  run.check("caloricity defect order", "heat-kernel-caloricity", order >= 1.9, order, 1.9);
  run.write("caloricity.csv", cal);

  Table cut{{"r", "gradient", "laplacian"}, {}};
  std::vector<CutoffConstants> cs;
  for (double r : {0.1, 0.2, 0.4}) {
    cs.push_back(cutoff_constants({dim, {0.0, 0.0}, r}));
    cut.add({num(r), num(cs.back().gradient), num(cs.back().laplacian)});
  }
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
  double dg = 0, dl = 0;
  for (const auto& c : cs) {
    dg = std::max(dg, rel(c.gradient, cs[0].gradient));
    dl = std::max(dl, rel(c.laplacian, cs[0].laplacian));
  }
  run.check("sup r |D xi| across r", "cutoff-scaling", dg <= 1e-6, dg, 1e-6);
  run.check("sup r^2 |Delta xi| across r", "cutoff-scaling", dl <= 1e-6, dl, 1e-6);
  run.write("cutoff.csv", cut);

  SolveConfig v;
  v.grid = cfg.grid;
  v.penalty = cfg.penalty;
  v.validation_only = true;
  v.newton_tol = cfg.newton_tol;
  v.newton_max_iter = cfg.newton_max_iter;
  v.M_bound = std::numeric_limits<double>::max();
  const Grid grid(cfg.grid);
  const auto caloric = ExactSolution::caloric(standard_caloric()).eval;
  v.initial = unmollified([&](const Point& x) { return caloric(x, 0.0); }, grid, cfg.penalty.eps);
  v.lateral_bc = {LateralBoundary::Kind::exact, caloric};
  const double err = max_error(run.timed("caloric_solve", [&] { return solve(v); }).field, caloric);
  // x1^2 + 2t is reproduced exactly by the scheme; what remains is the
  // Newton tolerance accumulated over the steps.
  const double bound = 10 * cfg.newton_tol * grid.levels();
  run.check("caloric polynomial reproduced", "scheme-consistency", err <= bound, err, bound);

  const double lip = measured_penalty_lipschitz(cfg.penalty);
  const double lip_bound = penalty_lipschitz_bound(cfg.penalty);
  run.check("penalty Lipschitz constant", "penalty-regularization", lip <= lip_bound * (1 + 1e-9), lip, lip_bound);
  double drop = 0;
  for (int i = 0; i <= 4000; ++i) {
    const double s = cfg.penalty.eps * (-2.0 + i / 1000.0);
    drop = std::min(drop, penalty_slope(cfg.penalty, s));
  }
  run.check("penalty non-decreasing", "penalty-regularization", drop >= 0, drop, 0.0);
}

json checks_json(const std::vector<Check>& checks) {
  json out = json::array();
  for (const auto& c : checks)
    out.push_back({{"name", c.name}, {"statement", c.statement}, {"pass", c.pass}, {"value", c.value},
                   {"bound", c.bound}, {"detail", c.detail}});
  return out;
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  RunResult res;
  res.kind = cfg.kind;
  fs::create_directories(opts.out_dir);
  Run run(cfg, opts, res);
  const auto t0 = Clock::now();
  try {
    cfg.validate();
    switch (cfg.kind) {
      case ExperimentKind::solve: run_solve(run); break;
      case ExperimentKind::epsilon_ladder: run_ladder(run); break;
      case ExperimentKind::monotonicity: run_monotonicity(run); break;
      case ExperimentKind::regularity_sweep: run_regularity_sweep(run); break;
      case ExperimentKind::convergence: run_convergence(run); break;
      case ExperimentKind::validate: run_validate(run); break;
    }
  } catch (const SolverError& e) {
    res.error = RunError{"solver", e.what(), e.last_residual(), e.trace()};
  } catch (const ConfigError& e) {
    std::string msg;
    for (const auto& v : e.violations()) msg += (msg.empty() ? "" : "; ") + v;
    res.error = RunError{"config", msg, 0.0, {}};
  } catch (const Error& e) {
    res.error = RunError{error_type(e), e.what(), 0.0, {}};
  }
  res.timings.emplace_back("total", std::chrono::duration<double>(Clock::now() - t0).count());

  Table checks{{"name", "statement", "value", "bound", "pass"}, {}};
  for (const auto& c : res.checks)
    checks.add({"\"" + c.name + "\"", c.statement, num(c.value), num(c.bound), c.pass ? "1" : "0"});
  run.write("checks.csv", checks);

  json report;
  report["schema"] = "parobs-report";
  report["schema_version"] = report_schema_version;
  report["kind"] = to_string(cfg.kind);
  report["status"] = res.error ? "error" : (res.pass() ? "pass" : "fail");
  json config = json::object();
  for (const auto& [k, v] : resolved_config_entries(cfg)) config[k] = v;
  report["config"] = config;
  report["checks"] = checks_json(res.checks);
  json metrics = json::object();
  for (const auto& [k, v] : res.metrics) metrics[k] = v;
  report["metrics"] = metrics;
  json timings = json::object();
  for (const auto& [k, v] : res.timings) timings[k] = v;
  report["timings_seconds"] = timings;
  if (res.error)
    report["error"] = {{"type", res.error->type},
                       {"message", res.error->message},
                       {"last_residual", res.error->last_residual},
                       {"residual_trace", res.error->residual_trace}};
  report["files"] = res.files;
  write_json(opts.out_dir / "report.json", report);
  return res;
}

void write_config_error_report(const fs::path& out_dir, ExperimentKind kind, const ConfigError& e) {
  json report;
  report["schema"] = "parobs-report";
  report["schema_version"] = report_schema_version;
  report["kind"] = to_string(kind);
  report["status"] = "error";
  report["error"] = {{"type", "config"}, {"message", e.what()}, {"violations", e.violations()}};
  write_json(out_dir / "report.json", report);
}

}  // namespace parobs
