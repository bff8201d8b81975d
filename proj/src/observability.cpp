#include "wavelab/observability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavelab/errors.hpp"
#include "wavelab/io.hpp"

namespace wavelab {

ObservationSpec ObservationSpec::boundary(Side side, double horizon) {
  ObservationSpec s;
  s.kind = Kind::boundary;
  s.side = side;
  s.horizon = horizon;
  return s;
}

ObservationSpec ObservationSpec::internal_displacement(Eigen::Index first, Eigen::Index last,
                                                       double horizon) {
  ObservationSpec s;
  s.kind = Kind::internal_displacement;
  s.first = first;
  s.last = last;
  s.horizon = horizon;
  return s;
}

ObservationSpec ObservationSpec::internal_velocity(Eigen::Index first, Eigen::Index last,
                                                   double horizon) {
  ObservationSpec s = internal_displacement(first, last, horizon);
  s.kind = Kind::internal_velocity;
  return s;
}

std::string ObservationSpec::label() const {
  switch (kind) {
    case Kind::boundary:
      return side == Side::left ? "boundary_left" : "boundary_right";
    case Kind::internal_displacement:
      return "internal_displacement[" + std::to_string(first) + "," + std::to_string(last) + "]";
    case Kind::internal_velocity:
      return "internal_velocity[" + std::to_string(first) + "," + std::to_string(last) + "]";
  }
  return "";
}

std::pair<Eigen::Index, Eigen::Index> node_range(const Grid1D& grid, double l1, double l2) {
  if (!(l1 < l2)) throw InvalidArgument("observation interval must satisfy l1 < l2");
  const double eps = 1e-12;
  const auto first = static_cast<Eigen::Index>(std::ceil((l1 - grid.x_left) / grid.h - eps));
  const auto last = static_cast<Eigen::Index>(std::floor((l2 - grid.x_left) / grid.h + eps));
  const Eigen::Index lo = std::max<Eigen::Index>(first, 0);
  const Eigen::Index hi = std::min<Eigen::Index>(last, grid.n_cells);
  if (hi < lo) throw InvalidArgument("observation interval contains no grid node");
  return {lo, hi};
}

Eigen::Index level_at(const Trajectory& t, double horizon) {
  if (!(horizon > 0.0)) throw InvalidArgument("observation horizon must be positive");
  const double s = horizon / t.dt;
  const double r = std::round(s);
  if (std::abs(r - s) > 1e-9 * std::max(1.0, s))
    throw InvalidArgument("observation horizon is not a time level of the trajectory");
  const auto level = static_cast<Eigen::Index>(r);
  if (level > t.steps) throw InvalidArgument("observation horizon exceeds the trajectory");
  return level;
}

namespace {

double time_trapezoid(double dt, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::Index n = u.size() - 1;
  if (n < 1) return 0.0;
  return dt * (u.sum() - 0.5 * (u(0) + u(n)));
}

double range_trapezoid(double h, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::Index n = u.size() - 1;
  if (n < 1) return 0.0;
  return h * (u.sum() - 0.5 * (u(0) + u(n)));
}

}  // namespace

double observed_energy(const Trajectory& t, const ObservationSpec& spec) {
  const Eigen::Index m = level_at(t, spec.horizon);
  if (spec.kind == ObservationSpec::Kind::boundary) {
    const Eigen::VectorXd w = boundary_flux(t, spec.side).head(m + 1);
    return time_trapezoid(t.dt, w.array().square().matrix());
  }
  if (!t.full_record()) throw InvalidArgument("internal observation needs every time level");
  if (spec.first < 0 || spec.last < spec.first || spec.last > t.grid.n_cells)
    throw InvalidArgument("observation region is empty or outside the grid");
  const Eigen::Index width = spec.last - spec.first + 1;
  const Eigen::MatrixXd& src =
      spec.kind == ObservationSpec::Kind::internal_displacement ? t.displacement : t.velocity;
  Eigen::VectorXd per_level(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) {
    const Eigen::VectorXd seg = src.col(k).segment(spec.first, width);
    // A single-node region degenerates to a point value; use h as its width.
    per_level(k) = width == 1 ? t.grid.h * seg(0) * seg(0)
                              : range_trapezoid(t.grid.h, seg.array().square().matrix());
  }
  return time_trapezoid(t.dt, per_level);
}

nlohmann::json TheoreticalBounds::to_json() const {
  nlohmann::json j;
  j["T"] = horizon;
  j["R"] = radius;
  j["multiplier_threshold"] = multiplier_threshold;
  j["sidewise_threshold"] = sidewise_threshold;
  j["C_inverse_multiplier"] =
      c_inverse_multiplier ? nlohmann::json(*c_inverse_multiplier) : nlohmann::json(nullptr);
  j["C_inverse_sidewise"] =
      c_inverse_sidewise ? nlohmann::json(*c_inverse_sidewise) : nlohmann::json(nullptr);
  j["direct_shape"] = direct_shape;
  return j;
}

TheoreticalBounds theoretical_bounds(const Domain<double>& domain, const ObserverPoint<double>& x0,
                                     double a0, double total_variation, double a_end,
                                     double horizon) {
  if (!(a0 > 0.0)) throw InvalidArgument("a0 must be positive");
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  TheoreticalBounds b;
  b.horizon = horizon;
  b.radius = multiplier_radius(domain, x0);
  b.multiplier_threshold = 2.0 * b.radius;
  if (horizon > b.multiplier_threshold)
    b.c_inverse_multiplier = b.radius / (2.0 * (horizon - b.multiplier_threshold));
  if (const auto* iv = std::get_if<Interval<double>>(&domain)) {
    const double alpha = 1.0 / std::sqrt(a0);
    b.sidewise_threshold = 2.0 * alpha * (iv->right - iv->left);
    if (horizon > b.sidewise_threshold)
      b.c_inverse_sidewise =
          a_end * std::exp(total_variation / a0) / (horizon - b.sidewise_threshold);
  } else {
    b.sidewise_threshold = std::numeric_limits<double>::quiet_NaN();
  }
  return b;
}

Eigen::Index kept_mode_count(const Grid1D& grid, double filter_fraction) {
  if (!(filter_fraction > 0.0 && filter_fraction <= 1.0))
    throw InvalidArgument("filter fraction must lie in (0, 1]");
  const auto k = static_cast<Eigen::Index>(
      std::floor(filter_fraction * static_cast<double>(grid.interior_count()) + 1e-12));
  return std::max<Eigen::Index>(k, 1);
}

State random_modal_state(const Grid1D& grid, const CoefficientField& field, const ModeSet& modes,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Eigen::VectorXd c0(modes.count()), c1(modes.count());
  for (Eigen::Index k = 0; k < modes.count(); ++k) {
    c0(k) = coef(rng);
    c1(k) = coef(rng);
  }
  State s = state_from_interior(modes.eigenvectors * c0, modes.eigenvectors * c1);
  const double e = energy(grid, field, s);
  if (e > 0.0) {
    const double scale = 1.0 / std::sqrt(e);
    s.y *= scale;
    s.v *= scale;
  }
  return s;
}

nlohmann::json ObservabilityReport::to_json() const {
  nlohmann::json j;
  j["spec"] = spec.label();
  j["T"] = horizon;
  j["filter_fraction"] = filter_fraction;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : samples) {
    nlohmann::json e;
    e["id"] = s.id;
    e["E0"] = s.e0;
    e["observed"] = s.observed;
    e["ratio"] = s.ratio;
    e["observable"] = s.observable;
    arr.push_back(e);
  }
  j["samples"] = arr;
  j["C_emp"] = std::isfinite(c_emp) ? nlohmann::json(c_emp) : nlohmann::json("inf");
  j["C_theo"] = c_theo ? nlohmann::json(*c_theo) : nlohmann::json(nullptr);
  j["bounds"] = bounds.to_json();
  j["surrogate_norm"] = surrogate;
  nlohmann::json verdicts;
  verdicts["all_observable"] = unobservable == 0;
  verdicts["unobservable_samples"] = unobservable;
  verdicts["C_theo_available"] = c_theo.has_value();
  verdicts["C_emp_within_C_theo"] = within_theory(0.1);
  j["verdicts"] = verdicts;
  return j;
}

ObservabilityReport observability_ratio_ensemble(const Grid1D& grid, const CoefficientField& field,
                                                 const ObservationSpec& spec,
                                                 const Ensemble& ensemble,
                                                 double filter_fraction, double cfl) {
  if (ensemble.count < 1) throw InvalidArgument("ensemble must be non-empty");
  const Eigen::Index kept = kept_mode_count(grid, filter_fraction);
  const Eigen::Index needed = ensemble.kind == Ensemble::Kind::modes ? ensemble.count : kept;
  if (ensemble.kind == Ensemble::Kind::modes && needed > grid.interior_count())
    throw InvalidArgument("more modes requested than the grid carries");
  const ModeSet modes = dirichlet_eigenpairs(grid, field, needed);

  ObservabilityReport report;
  report.spec = spec;
  report.horizon = spec.horizon;
  report.filter_fraction = filter_fraction;
  report.surrogate = spec.kind == ObservationSpec::Kind::internal_displacement;

  const Interval<double> domain{grid.x_left, grid.x_right};
  ObserverPoint<double> x0(1);
  x0(0) = spec.side == Side::right ? grid.x_left : grid.x_right;
  const Eigen::Index end_cell = spec.side == Side::right ? grid.n_cells - 1 : 0;
  report.bounds = theoretical_bounds(domain, x0, field.a0, field.total_variation,
                                     field.values(end_cell), spec.horizon);
  if (spec.kind == ObservationSpec::Kind::boundary) {
    const bool unit_speed = field.is_constant() && std::abs(field.a0 - 1.0) < 1e-14;
    report.c_theo = unit_speed ? report.bounds.c_inverse_multiplier
                               : report.bounds.c_inverse_sidewise;
  }

  SimulationSetup setup;
  setup.horizon = spec.horizon;
  setup.dt = stable_dt(grid, field, spec.horizon, cfl);
  setup.record_stride = spec.kind == ObservationSpec::Kind::boundary ? 0 : 1;

  std::mt19937_64 rng(ensemble.seed);
  report.c_emp = 0.0;
  for (Eigen::Index i = 0; i < ensemble.count; ++i) {
    State s = ensemble.kind == Ensemble::Kind::modes
                  ? state_from_interior(modes.eigenvectors.col(i),
                                        Eigen::VectorXd::Zero(grid.interior_count()))
                  : random_modal_state(grid, field, modes, rng);
    const Trajectory t = simulate(grid, field, s, setup);
    ObservabilitySample sample;
    sample.id = i;
    sample.e0 = energy(grid, field, s);
    sample.observed = observed_energy(t, spec);
    if (sample.e0 <= 0.0) throw InvalidArgument("ensemble sample has zero energy");
    sample.ratio = sample.observed / sample.e0;
    sample.observable = sample.observed > kUnobservableLevel * sample.e0;
    sample.inverse_ratio = sample.observable ? sample.e0 / sample.observed
                                             : std::numeric_limits<double>::infinity();
    if (!sample.observable) ++report.unobservable;
    report.c_emp = std::max(report.c_emp, sample.inverse_ratio);
    report.samples.push_back(sample);
  }
  return report;
}

nlohmann::json SidewiseProfile::to_json() const {
  nlohmann::json j;
  j["x"] = wavelab::to_json(x);
  j["F"] = wavelab::to_json(F);
  j["growth_factor"] = growth_factor;
  j["max_growth"] = max_growth;
  j["growth_bound_ok"] = growth_bound_ok;
  j["coefficient_nondecreasing"] = coefficient_nondecreasing;
  j["nonincreasing"] = nonincreasing;
  return j;
}

namespace {

// Integral over [ta, tb] of the piecewise-linear interpolant of samples e(k) at k*dt.
double window_integral(const Eigen::Ref<const Eigen::VectorXd>& e, double dt, double ta,
                       double tb) {
  const Eigen::Index m = e.size() - 1;
  auto value_at = [&](double t) {
    const double s = t / dt;
    const Eigen::Index k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(s)), 0,
                                                    m - 1);
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * e(k) + w * e(k + 1);
  };
  const auto ka = static_cast<Eigen::Index>(std::ceil(ta / dt - 1e-9));
  const auto kb = static_cast<Eigen::Index>(std::floor(tb / dt + 1e-9));
  if (ka > kb) return 0.5 * (value_at(ta) + value_at(tb)) * (tb - ta);
  double sum = 0.5 * (value_at(ta) + e(ka)) * (static_cast<double>(ka) * dt - ta);
  for (Eigen::Index k = ka; k < kb; ++k) sum += 0.5 * dt * (e(k) + e(k + 1));
  sum += 0.5 * (e(kb) + value_at(tb)) * (tb - static_cast<double>(kb) * dt);
  return sum;
}

}  // namespace

SidewiseProfile sidewise_energy(const Trajectory& t, const CoefficientField& field, double horizon,
                                double monotone_tol, double growth_tol) {
  if (!t.full_record()) throw InvalidArgument("sidewise energy needs every time level");
  const Grid1D& g = t.grid;
  const double alpha = 1.0 / std::sqrt(field.a0);
  const double length = g.x_right - g.x_left;
  if (!(horizon > 2.0 * alpha * length))
    throw InvalidArgument("sidewise energy needs T > 2 / sqrt(a0) times the interval length");
  const Eigen::Index m = level_at(t, horizon);
  const Eigen::Index n = g.n_cells;

  // Energy density phi'^2 + a phi_x^2 at nodes 0..n-1 and every level.
  Eigen::MatrixXd density(n, m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) {
    const auto y = t.displacement.col(k);
    const auto v = t.velocity.col(k);
    const double d0 = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * g.h);
    density(0, k) = v(0) * v(0) + field.values(0) * d0 * d0;
    for (Eigen::Index j = 1; j < n; ++j) {
      const double sl = (y(j) - y(j - 1)) / g.h;
      const double sr = (y(j + 1) - y(j)) / g.h;
      density(j, k) =
          v(j) * v(j) + 0.5 * (field.values(j - 1) * sl * sl + field.values(j) * sr * sr);
    }
  }

  SidewiseProfile p;
  p.x.resize(n);
  p.F.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dist = g.node(j) - g.x_left;
    p.x(j) = g.node(j);
    p.F(j) = 0.5 * window_integral(density.row(j).transpose(), t.dt, alpha * dist,
                                   horizon - alpha * dist);
  }
  p.growth_factor = std::exp(field.total_variation / field.a0);
  const double f0 = p.F(0);
  p.max_growth = f0 > 0.0 ? p.F.maxCoeff() / f0 : 0.0;
  p.growth_bound_ok = (p.F.array() <= p.growth_factor * f0 * (1.0 + growth_tol)).all();
  p.coefficient_nondecreasing = true;
  for (Eigen::Index c = 1; c < field.values.size(); ++c)
    if (field.values(c) < field.values(c - 1)) p.coefficient_nondecreasing = false;
  p.nonincreasing = true;
  for (Eigen::Index j = 1; j < n; ++j)
    if (p.F(j) > p.F(j - 1) + monotone_tol * f0) p.nonincreasing = false;
  return p;
}

}  // namespace wavelab
