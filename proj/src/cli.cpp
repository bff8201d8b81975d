#include "wavelab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/geometry.hpp"
#include "wavelab/hum.hpp"
#include "wavelab/io.hpp"
#include "wavelab/observability.hpp"
#include "wavelab/scenarios.hpp"
#include "wavelab/semilinear.hpp"
#include "wavelab/stabilization.hpp"

namespace wavelab {

namespace {

using nlohmann::json;

const double kPi = std::acos(-1.0);

const std::vector<KeySpec>& global_keys() {
  static const std::vector<KeySpec> keys{
      {"seed", "1", "seed of every random ensemble"},
      {"out_dir", "wavelab_out", "output directory"},
      {"n_cells", "200", "grid cells"},
      {"dt_cfl", "0.9", "time step as a fraction of the CFL limit"},
      {"filter_fraction", "0.5", "kept fraction of the discrete modes (1: no filter)"},
  };
  return keys;
}

const std::map<std::string, std::vector<KeySpec>>& local_keys() {
  static const std::map<std::string, std::vector<KeySpec>> keys{
      {"geometry",
       {{"shape", "interval", "interval | square | rectangle | disk"},
        {"x0", "", "observer point, comma list (default: left end or center)"},
        {"x_left", "0", "interval left end"},
        {"x_right", "1", "interval right end"},
        {"corner_min", "0,0", "rectangle lower corner"},
        {"corner_max", "1,1", "rectangle upper corner"},
        {"center", "0,0", "disk center"},
        {"radius", "1", "disk radius"},
        {"a0", "1", "lower bound of the coefficient"},
        {"placement", "multiplier_geometric",
         "multiplier_geometric | boundary_one_end | boundary_both_ends | internal"},
        {"l1", "0.3", "internal control interval left end"},
        {"l2", "0.7", "internal control interval right end"}}},
      {"simulate",
       {{"x_left", "0", "left end"},
        {"x_right", "1", "right end"},
        {"coefficient", "constant:1", "constant:a | jump:a_left,a_right,x | linear:a_left,a_right | file:path.csv"},
        {"initial", "mode:1", "mode:k | modes:K (seeded random) | bump:center,width"},
        {"amplitude", "1", "initial data scale"},
        {"horizon", "2", "final time"},
        {"damping", "none", "none | internal | boundary"},
        {"law", "linear", "damping law: linear | power<p> | saturating | sqrt"},
        {"weight", "1", "internal damping weight"},
        {"side", "right", "damped end for boundary damping"},
        {"alpha", "1", "boundary damping weight"},
        {"b", "0", "boundary zeroth-order coefficient"}}},
      {"observe",
       {{"x_left", "0", "left end"},
        {"x_right", "1", "right end"},
        {"coefficient", "constant:1", "see simulate"},
        {"horizon", "3", "observation time"},
        {"observation", "boundary", "boundary | internal_velocity | internal_displacement"},
        {"side", "right", "observed end"},
        {"l1", "0.3", "omega left end"},
        {"l2", "0.7", "omega right end"},
        {"ensemble", "random", "random | modes"},
        {"samples", "50", "ensemble size"}}},
      {"hum",
       {{"x_left", "0", "left end"},
        {"x_right", "1", "right end"},
        {"coefficient", "constant:1", "see simulate"},
        {"region", "boundary", "boundary | internal"},
        {"side", "right", "controlled end"},
        {"l1", "0.3", "omega left end"},
        {"l2", "0.7", "omega right end"},
        {"horizon", "2.5", "control time"},
        {"ramp_fraction", "0.1", "cutoff ramp width over T (0: no cutoff)"},
        {"initial", "mode:1", "see simulate"},
        {"amplitude", "1", "initial data scale"},
        {"cg_tol", "1e-8", "relative CG tolerance"},
        {"cg_max_iter", "0", "CG iteration cap (0: subspace dimension)"}}},
      {"semilinear",
       {{"x_left", "0", "left end"},
        {"x_right", "1", "right end"},
        {"coefficient", "constant:1", "see simulate"},
        {"l1", "0.3", "omega left end"},
        {"l2", "0.7", "omega right end"},
        {"horizon", "2.5", "control time"},
        {"nonlinearity", "sine", "zero | linear | sine | arctan | cubic | linear_arctan"},
        {"alpha", "1", "slope of the linear presets"},
        {"initial", "mode:1", "see simulate"},
        {"amplitude", "0.5", "initial data scale"},
        {"tol", "1e-6", "fixed-point tolerance"},
        {"max_iter", "30", "fixed-point iteration cap"},
        {"relaxation", "1", "relaxation in (0, 1]"}}},
      {"stabilize",
       {{"manifest", "", "sweep manifest CSV (id,law,placement,n_cells,horizon); empty: single run"},
        {"jobs", "1", "sweep workers (runs are executed in order)"},
        {"law", "linear", "damping law: linear | power<p> | saturating | sqrt"},
        {"placement", "internal", "internal | boundary"},
        {"weight", "1", "internal damping weight"},
        {"alpha", "1", "boundary damping weight"},
        {"horizon", "20", "final time"},
        {"initial", "modes:10", "see simulate"},
        {"amplitude", "1", "initial data scale"},
        {"window", "", "fit window t_a,t_b (default 0.2T,T)"},
        {"model", "auto", "auto | exponential | polynomial"}}},
      {"reproduce", {}},
  };
  return keys;
}

Side parse_side(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw InvalidArgument("side must be left or right, got '" + s + "'");
}

std::pair<std::string, std::vector<double>> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    Config tmp;
    tmp.set("spec", spec.substr(colon + 1));
    if (kind != "file") args = tmp.numbers("spec");
  }
  return {kind, args};
}

CoefficientField make_coefficient(const Grid1D& g, const std::string& spec) {
  const auto [kind, a] = split_spec(spec);
  auto need = [&](std::size_t n) {
    if (a.size() != n) throw InvalidArgument("coefficient '" + spec + "' expects " + std::to_string(n) + " numbers");
  };
  if (kind == "constant") {
    need(1);
    if (!(a[0] > 0.0)) throw InvalidArgument("coefficient must be positive");
    return uniform_coefficient(g, a[0]);
  }
  if (kind == "jump") {
    need(3);
    const double l = a[0], r = a[1], x = a[2];
    return sample_coefficient(g, [=](double s) { return s < x ? l : r; });
  }
  if (kind == "linear") {
    need(2);
    const double l = a[0], r = a[1], xl = g.x_left, len = g.x_right - g.x_left;
    return sample_coefficient(g, [=](double s) { return l + (r - l) * (s - xl) / len; });
  }
  if (kind == "file") return sample_coefficient(g, read_coefficient_csv(spec.substr(5)));
  throw InvalidArgument("unknown coefficient '" + spec + "'");
}

State make_initial(const Grid1D& g, const CoefficientField& f, const std::string& spec,
                   double amplitude, std::uint64_t seed) {
  const auto [kind, a] = split_spec(spec);
  const double xl = g.x_left, len = g.x_right - g.x_left;
  State s;
  if (kind == "mode") {
    if (a.size() != 1 || !(a[0] >= 1.0) || a[0] != std::floor(a[0]))
      throw InvalidArgument("initial mode:k needs a positive integer k");
    const double k = a[0];
    s = sample_state(
        g, [=](double x) { return std::sin(k * kPi * (x - xl) / len); }, [](double) { return 0.0; });
  } else if (kind == "modes") {
    if (a.size() != 1 || !(a[0] >= 1.0)) throw InvalidArgument("initial modes:K needs K >= 1");
    s = broadband_state(g, f, static_cast<Eigen::Index>(a[0]), seed);
  } else if (kind == "bump") {
    if (a.size() != 2 || !(a[1] > 0.0)) throw InvalidArgument("initial bump:center,width needs width > 0");
    const double c = a[0], w = a[1];
    s = sample_state(
        g,
        [=](double x) {
          const double r = (x - c) / w;
          return std::abs(r) < 1.0 ? std::pow(std::cos(0.5 * kPi * r), 4) : 0.0;
        },
        [](double) { return 0.0; });
  } else {
    throw InvalidArgument("unknown initial data '" + spec + "'");
  }
  s.y *= amplitude;
  s.v *= amplitude;
  return s;
}

DampingLaw make_law(const std::string& name) { return damping_law_preset(name); }

Grid1D make_grid(const Config& c) {
  const long long n = c.integer("n_cells");
  return build_grid(c.number("x_left"), c.number("x_right"), static_cast<Eigen::Index>(n));
}

double cfl_of(const Config& c) {
  const double cfl = c.number("dt_cfl");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("dt_cfl must lie in (0, 1]");
  return cfl;
}

struct Outcome {
  json summary;
  int exit_code = kExitOk;
  std::string failure;  // message for the error record when exit_code != 0
};

json piece_json(const BoundaryPiece<double>& p) {
  const char* kind = p.kind == PieceKind::point ? "point" : p.kind == PieceKind::segment ? "segment" : "arc";
  return {{"label", p.label}, {"kind", kind}, {"begin", p.begin}, {"end", p.end}, {"measure", p.measure}};
}

Outcome cmd_geometry(const Config& c) {
  const std::string shape = c.text("shape");
  Domain<double> domain;
  ObserverPoint<double> center;
  if (shape == "interval") {
    domain = Interval<double>{c.number("x_left"), c.number("x_right")};
    center = ObserverPoint<double>::Constant(1, c.number("x_left"));
  } else if (shape == "square" || shape == "rectangle") {
    const auto lo = c.numbers("corner_min"), hi = c.numbers("corner_max");
    if (lo.size() != 2 || hi.size() != 2) throw InvalidArgument("corners need two coordinates");
    domain = Rectangle<double>{Point2<double>(lo[0], lo[1]), Point2<double>(hi[0], hi[1])};
    center = ObserverPoint<double>(2);
    center << 0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]);
  } else if (shape == "disk") {
    const auto ctr = c.numbers("center");
    if (ctr.size() != 2) throw InvalidArgument("center needs two coordinates");
    domain = Disk<double>{Point2<double>(ctr[0], ctr[1]), c.number("radius")};
    center = ObserverPoint<double>(2);
    center << ctr[0], ctr[1];
  } else {
    throw InvalidArgument("unknown shape '" + shape + "'");
  }
  ObserverPoint<double> x0 = center;
  const auto given = c.numbers("x0");
  if (!given.empty()) x0 = Eigen::Map<const Eigen::VectorXd>(given.data(), static_cast<Eigen::Index>(given.size()));

  const std::string placement_name = c.text("placement");
  ControlPlacement<double> placement;
  if (placement_name == "multiplier_geometric") placement = MultiplierGeometric{};
  else if (placement_name == "boundary_one_end") placement = BoundaryOneEnd{};
  else if (placement_name == "boundary_both_ends") placement = BoundaryBothEnds{};
  else if (placement_name == "internal") placement = InternalInterval<double>{c.number("l1"), c.number("l2")};
  else throw InvalidArgument("unknown placement '" + placement_name + "'");

  const double radius = multiplier_radius(domain, x0);
  const BoundaryPartition<double> part = boundary_partition(domain, x0);
  json record;
  record["R"] = radius;
  record["2R"] = 2.0 * radius;
  record["gamma_x0"] = json::array();
  for (const auto& p : part.gamma_x0) record["gamma_x0"].push_back(piece_json(p));
  record["gamma_star"] = json::array();
  for (const auto& p : part.gamma_star) record["gamma_star"].push_back(piece_json(p));
  record["T_min"] = minimal_control_time(domain, x0, c.number("a0"), placement);
  return {record};
}

Outcome cmd_simulate(const Config& c, const std::string& dir) {
  const Grid1D g = make_grid(c);
  const CoefficientField f = make_coefficient(g, c.text("coefficient"));
  const State s0 = make_initial(g, f, c.text("initial"), c.number("amplitude"), c.unsigned_integer("seed"));
  SimulationSetup s;
  s.horizon = c.number("horizon");
  s.dt = stable_dt(g, f, s.horizon, cfl_of(c));
  s.record_stride = 0;
  const std::string damping = c.text("damping");
  const DampingLaw law = make_law(c.text("law"));
  if (damping == "internal") {
    s.damping = InternalDampingSpec::uniform(g, law, c.number("weight"));
  } else if (damping == "boundary") {
    s.bc.on(parse_side(c.text("side"))) = Dissipative{c.number("alpha"), c.number("b"), law};
  } else if (damping != "none") {
    throw InvalidArgument("damping must be none, internal or boundary");
  }
  const Trajectory t = simulate(g, f, s0, s);
  write_columns_csv(dir + "/energy.csv", {"t", "E", "E_staggered", "dissipation"},
                    {t.time, t.energy, t.energy_staggered, t.dissipation});
  write_columns_csv(dir + "/final_state.csv", {"x", "y", "v"}, {g.nodes(), t.end.y, t.end.v});
  const BalanceReport bal = dissipation_balance(t);
  json rep;
  rep["steps"] = t.steps;
  rep["dt"] = t.dt;
  rep["initial_energy"] = t.energy(0);
  rep["final_energy"] = t.energy(t.steps);
  rep["balance_residual"] = bal.max_relative();
  write_json(dir + "/report.json", rep);
  return {rep};
}

ObservationSpec make_observation(const Config& c, const Grid1D& g) {
  const std::string kind = c.text("observation");
  const double horizon = c.number("horizon");
  if (kind == "boundary") return ObservationSpec::boundary(parse_side(c.text("side")), horizon);
  const auto [first, last] = node_range(g, c.number("l1"), c.number("l2"));
  if (kind == "internal_velocity") return ObservationSpec::internal_velocity(first, last, horizon);
  if (kind == "internal_displacement") return ObservationSpec::internal_displacement(first, last, horizon);
  throw InvalidArgument("unknown observation '" + kind + "'");
}

Outcome cmd_observe(const Config& c, const std::string& dir) {
  const Grid1D g = make_grid(c);
  const CoefficientField f = make_coefficient(g, c.text("coefficient"));
  const ObservationSpec spec = make_observation(c, g);
  const long long count = c.integer("samples");
  if (count < 1) throw InvalidArgument("samples must be positive");
  const std::string kind = c.text("ensemble");
  Ensemble ens;
  if (kind == "random") ens = Ensemble::random(count, c.unsigned_integer("seed"));
  else if (kind == "modes") ens = Ensemble::modes(count);
  else throw InvalidArgument("ensemble must be random or modes");
  const ObservabilityReport r =
      observability_ratio_ensemble(g, f, spec, ens, c.number("filter_fraction"), cfl_of(c));
  const Eigen::Index n = static_cast<Eigen::Index>(r.samples.size());
  Eigen::VectorXd id(n), e0(n), obs(n), inv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = r.samples[static_cast<std::size_t>(i)];
    id(i) = static_cast<double>(s.id);
    e0(i) = s.e0;
    obs(i) = s.observed;
    inv(i) = s.inverse_ratio;
  }
  write_columns_csv(dir + "/samples.csv", {"id", "E0", "observed", "E0_over_observed"}, {id, e0, obs, inv});
  write_json(dir + "/report.json", r.to_json());
  json sum;
  sum["c_emp"] = r.c_emp;
  sum["c_theo"] = r.c_theo ? json(*r.c_theo) : json(nullptr);
  sum["unobservable"] = r.unobservable;
  return {sum};
}

HUMProblem make_hum_problem(const Config& c, const std::string& region) {
  HUMProblem p;
  p.grid = make_grid(c);
  p.field = make_coefficient(p.grid, c.text("coefficient"));
  if (region == "boundary") {
    p.region = ControlRegion::boundary(parse_side(c.text("side")));
  } else if (region == "internal") {
    const auto [first, last] = node_range(p.grid, c.number("l1"), c.number("l2"));
    p.region = ControlRegion::internal(first, last);
  } else {
    throw InvalidArgument("region must be boundary or internal");
  }
  p.horizon = c.number("horizon");
  p.cfl = cfl_of(c);
  p.filter_fraction = c.number("filter_fraction");
  return p;
}

Outcome cmd_hum(const Config& c, const std::string& dir) {
  HUMProblem p = make_hum_problem(c, c.text("region"));
  p.ramp_fraction = c.number("ramp_fraction");
  p.cg.tol = c.number("cg_tol");
  p.cg.max_iter = static_cast<Eigen::Index>(c.integer("cg_max_iter"));
  const State s0 = make_initial(p.grid, p.field, c.text("initial"), c.number("amplitude"),
                                c.unsigned_integer("seed"));
  const HUMSolution sol = solve_hum(p, s0);
  write_control_csv(p.grid, sol.control, dir + "/control.csv");
  json rep;
  rep["diagnostics"] = sol.diagnostics_json();
  rep["verification"] = sol.verification.to_json();
  write_json(dir + "/report.json", rep);
  json sum;
  sum["terminal_energy_ratio"] = sol.verification.terminal_energy_ratio;
  sum["iterations"] = sol.iterations;
  sum["control_norm"] = std::sqrt(sol.control_norm_sq);
  sum["below_threshold"] = sol.below_threshold;
  return {sum};
}

Outcome cmd_semilinear(const Config& c, const std::string& dir) {
  const HUMProblem p = make_hum_problem(c, "internal");
  const Nonlinearity f = nonlinearity_preset(c.text("nonlinearity"), c.number("alpha"));
  const State s0 = make_initial(p.grid, p.field, c.text("initial"), c.number("amplitude"),
                                c.unsigned_integer("seed"));
  FixedPointOptions opt;
  opt.tol = c.number("tol");
  opt.max_iter = static_cast<int>(c.integer("max_iter"));
  opt.relaxation = c.number("relaxation");
  const FixedPointReport r = fixed_point_control(p, f, s0, std::nullopt, opt);
  write_json(dir + "/report.json", r.to_json());
  Eigen::VectorXd k(static_cast<Eigen::Index>(r.diffs.size())), d(k.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    k(i) = static_cast<double>(i + 1);
    d(i) = r.diffs[static_cast<std::size_t>(i)];
  }
  write_columns_csv(dir + "/iterations.csv", {"iteration", "diff"}, {k, d});
  json sum;
  sum["converged"] = r.converged;
  sum["iterations"] = r.iterations;
  sum["terminal_ratio"] = std::isfinite(r.terminal_ratio) ? json(r.terminal_ratio) : json(nullptr);
  Outcome out{sum};
  if (!r.converged) {
    out.exit_code = kExitNumerical;
    out.failure = r.message.empty() ? "fixed point did not converge" : r.message;
  }
  return out;
}

std::vector<SweepEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read manifest " + path);
  std::string line;
  std::vector<SweepEntry> out;
  bool header = true;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("id,", 0) == 0) continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw InvalidArgument(path + ":" + std::to_string(number) + ": expected 5 fields");
    Config row;
    row.set("n_cells", cells[3]);
    row.set("horizon", cells[4]);
    out.push_back({cells[0], cells[1], cells[2], static_cast<Eigen::Index>(row.integer("n_cells")),
                   row.number("horizon")});
  }
  if (out.empty()) throw InvalidArgument("manifest " + path + " lists no runs");
  return out;
}

Outcome cmd_stabilize(const Config& c, const std::string& dir) {
  if (c.integer("jobs") < 1) throw InvalidArgument("jobs must be at least 1");
  const std::string manifest = c.text("manifest");
  if (!manifest.empty()) {
    const SweepResult r = run_sweep(read_manifest(manifest), c.unsigned_integer("seed"), dir);
    json sum;
    sum["runs"] = r.ids.size();
    int failed = 0;
    for (const auto& rep : r.reports)
      failed += (rep.energy_nonincreasing && rep.bound_satisfied.value_or(true) &&
                 rep.exponent_within_tol.value_or(true)) ? 0 : 1;
    sum["failed_verdicts"] = failed;
    return {sum};
  }
  DecayExperimentConfig cfg;
  Config gc = c;
  gc.set("x_left", "0");
  gc.set("x_right", "1");
  cfg.grid = make_grid(gc);
  cfg.field = uniform_coefficient(cfg.grid);
  cfg.law = make_law(c.text("law"));
  const std::string placement = c.text("placement");
  if (placement == "internal") cfg.placement = DampingPlacement::internal_uniform(cfg.grid, c.number("weight"));
  else if (placement == "boundary") cfg.placement = DampingPlacement::boundary(Side::right, c.number("alpha"));
  else throw InvalidArgument("placement must be internal or boundary");
  cfg.initial = make_initial(cfg.grid, cfg.field, c.text("initial"), c.number("amplitude"),
                             c.unsigned_integer("seed"));
  cfg.horizon = c.number("horizon");
  cfg.cfl = cfl_of(c);
  const auto window = c.numbers("window");
  if (window.size() == 2) cfg.window = FitWindow{window[0], window[1]};
  else if (!window.empty()) throw InvalidArgument("window expects t_a,t_b");
  const std::string model = c.text("model");
  if (model == "exponential") cfg.model = DecayModel::exponential;
  else if (model == "polynomial") cfg.model = DecayModel::polynomial;
  else if (model != "auto") throw InvalidArgument("model must be auto, exponential or polynomial");
  const DecayReport rep = run_decay_experiment(cfg);
  write_json(dir + "/report.json", rep.to_json());
  write_columns_csv(dir + "/energy.csv", {"t", "E"}, {rep.time, rep.energy});
  json sum;
  sum["fit"] = rep.fit.to_json();
  sum["energy_nonincreasing"] = rep.energy_nonincreasing;
  sum["final_ratio"] = rep.final_ratio;
  return {sum};
}

Outcome cmd_reproduce(const Config& c, const std::string& name, const std::string& dir) {
  const ScenarioResult r = run_scenario(name, c.unsigned_integer("seed"));
  write_scenario(r, dir + "/" + name);
  json sum;
  sum["scenario"] = name;
  sum["criterion"] = r.criterion;
  sum["passed"] = r.passed();
  sum["checks"] = json::array();
  for (const auto& ch : r.checks) sum["checks"].push_back(ch.to_json());
  Outcome out{sum};
  if (!r.passed()) {
    out.exit_code = kExitNumerical;
    out.failure = "scenario " + name + " failed: " + r.summary();
  }
  return out;
}

json error_record(const std::string& kind, const std::string& message, int code) {
  return {{"error", kind}, {"message", message}, {"exit_code", code}, {"version", std::string(kVersion)}};
}

}  // namespace

std::vector<KeySpec> subcommand_schema(const std::string& subcommand) {
  const auto it = local_keys().find(subcommand);
  if (it == local_keys().end()) throw InvalidArgument("unknown subcommand '" + subcommand + "'");
  std::vector<KeySpec> out = global_keys();
  out.insert(out.end(), it->second.begin(), it->second.end());
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"wavelab: controllability and stabilization experiments for the 1-d wave equation", "wavelab"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  struct Slot {
    CLI::App* app = nullptr;
    std::string config_path;
    std::vector<std::string> sets;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::map<std::string, Slot> slots;
  std::string scenario;
  bool list_scenarios = false;
  bool no_filter = false;
  const std::map<std::string, std::string> about{
      {"geometry", "multiplier radius, boundary partition and minimal control time"},
      {"simulate", "one run of the (optionally damped) wave equation"},
      {"observe", "empirical observability constant over an ensemble"},
      {"hum", "HUM control and its replay"},
      {"semilinear", "fixed-point control of y'' - (a y_x)_x + f(y) = h chi_omega"},
      {"stabilize", "decay experiment or a sweep manifest"},
      {"reproduce", "run a named acceptance scenario"},
  };
  for (const auto& [name, text] : about) {
    Slot& slot = slots[name];
    slot.app = app.add_subcommand(name, text);
    slot.app->add_option("--config", slot.config_path, "key = value config file");
    slot.app->add_option("--set", slot.sets, "override, key=value (repeatable)");
    for (const auto& spec : subcommand_schema(name)) {
      std::string flag = "--" + spec.key;
      std::string alias = spec.key;
      std::replace(alias.begin(), alias.end(), '_', '-');
      if (alias != spec.key) flag += ",--" + alias;
      const std::string help = spec.help + (spec.default_value.empty() ? "" : " [" + spec.default_value + "]");
      slot.options[spec.key] = slot.app->add_option(flag, slot.values[spec.key], help);
    }
  }
  slots["hum"].app->add_flag("--no-filter", no_filter, "keep every mode (filter_fraction = 1)");
  slots["reproduce"].app->add_option("name", scenario, "scenario name");
  slots["reproduce"].app->add_flag("--list", list_scenarios, "list scenario names");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  }

  std::string name;
  for (const auto& [n, slot] : slots)
    if (slot.app->parsed()) name = n;
  Slot& slot = slots[name];
  try {
    if (name == "reproduce" && list_scenarios) {
      for (const auto& info : scenario_catalog())
        out << info.name << "  (criterion " << info.criterion << ": " << info.title << ")\n";
      return kExitOk;
    }
    Config config;
    if (!slot.config_path.empty()) config = Config::load(slot.config_path);
    for (const auto& [key, opt] : slot.options)
      if (opt->count() > 0) config.set(key, slot.values[key]);
    for (const auto& s : slot.sets) {
      const auto [k, v] = split_assignment(s);
      config.set(k, v);
    }
    if (no_filter) config.set("filter_fraction", "1");
    config.resolve(subcommand_schema(name));
    if (name == "reproduce" && scenario.empty()) throw InvalidArgument("reproduce needs a scenario name (see --list)");

    const std::string dir = config.text("out_dir");
    ensure_directory(dir);
    {
      std::ofstream echo(dir + "/config.txt");
      if (!echo) throw InvalidArgument("cannot write " + dir + "/config.txt");
      echo << "# wavelab " << name << (scenario.empty() ? "" : " " + scenario) << "\n" << config.echo();
    }
    Outcome o;
    if (name == "geometry") {
      o = cmd_geometry(config);
      write_json(dir + "/geometry.json", o.summary);
    } else if (name == "simulate") o = cmd_simulate(config, dir);
    else if (name == "observe") o = cmd_observe(config, dir);
    else if (name == "hum") o = cmd_hum(config, dir);
    else if (name == "semilinear") o = cmd_semilinear(config, dir);
    else if (name == "stabilize") o = cmd_stabilize(config, dir);
    else o = cmd_reproduce(config, scenario, dir);

    json line = o.summary;
    line["subcommand"] = name;
    line["version"] = std::string(kVersion);
    line["config_hash"] = hex64(config.hash());
    line["out_dir"] = dir;
    out << line.dump() << '\n';
    if (o.exit_code != kExitOk) err << error_record("numerical_error", o.failure, o.exit_code).dump() << '\n';
    return o.exit_code;
  } catch (const InvalidArgument& e) {
    err << error_record("invalid_argument", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    json rec = error_record("solver_error", e.what(), kExitNumerical);
    rec["residual_history"] = e.history();
    err << rec.dump() << '\n';
    return kExitNumerical;
  } catch (const CflError& e) {
    err << error_record("cfl_error", e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    err << error_record("numerical_error", e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << error_record("runtime_error", e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  }
}

}  // namespace wavelab
