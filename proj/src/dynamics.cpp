#include "wavelab/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <optional>

#include "wavelab/errors.hpp"
#include "wavelab/io.hpp"

namespace wavelab {

State zero_state(const Grid1D& grid, double t) {
  return {Eigen::VectorXd::Zero(grid.node_count()), Eigen::VectorXd::Zero(grid.node_count()), t};
}

State state_from_interior(const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& v, double t) {
  if (y.size() != v.size()) throw InvalidArgument("displacement and velocity lengths differ");
  return {with_zero_ends(y), with_zero_ends(v), t};
}

State sample_state(const Grid1D& grid, const std::function<double(double)>& y0,
                   const std::function<double(double)>& y1, double t) {
  State s = zero_state(grid, t);
  for (Eigen::Index j = 0; j < grid.node_count(); ++j) {
    s.y(j) = y0(grid.node(j));
    s.v(j) = y1(grid.node(j));
  }
  return s;
}

ForcingSpec ForcingSpec::internal(Eigen::MatrixXd field, Eigen::Index first, Eigen::Index last) {
  if (first < 0 || last < first || last >= field.rows())
    throw InvalidArgument("internal forcing support must be a non-empty node range");
  for (Eigen::Index j = 0; j < field.rows(); ++j) {
    if (j >= first && j <= last) continue;
    if (field.row(j).cwiseAbs().maxCoeff() != 0.0)
      throw InvalidArgument("internal forcing must vanish outside its support");
  }
  ForcingSpec f;
  f.kind = Kind::internal;
  f.field = std::move(field);
  f.support_first = first;
  f.support_last = last;
  return f;
}

ForcingSpec ForcingSpec::full_domain(Eigen::MatrixXd field) {
  ForcingSpec f;
  f.kind = Kind::full_domain;
  f.support_first = 0;
  f.support_last = field.rows() - 1;
  f.field = std::move(field);
  return f;
}

InternalDampingSpec InternalDampingSpec::uniform(const Grid1D& grid, DampingLaw law,
                                                 double weight) {
  InternalDampingSpec d;
  d.enabled = true;
  d.weight = Eigen::VectorXd::Constant(grid.node_count(), weight);
  d.law = std::move(law);
  return d;
}

double stable_dt(const Grid1D& grid, const CoefficientField& field, double horizon, double cfl) {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("CFL number must lie in (0, 1]");
  const double dt_max = cfl * grid.h / std::sqrt(field.a1);
  const double steps = std::ceil(horizon / dt_max - 1e-12);
  return horizon / steps;
}

Eigen::Index step_count(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw InvalidArgument("horizon and dt must be positive");
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(rounded * dt - horizon) > 1e-12 * std::max(1.0, horizon) || rounded < 1.0)
    throw InvalidArgument("dt must divide the horizon");
  return static_cast<Eigen::Index>(rounded);
}

double boundary_rayleigh_minimum(const Grid1D& grid, const CoefficientField& field,
                                 const BoundaryConditionSpec& bc) {
  const Eigen::Index n = grid.n_cells;
  const auto* left = std::get_if<Dissipative>(&bc.left);
  const auto* right = std::get_if<Dissipative>(&bc.right);
  const Eigen::Index first = left ? 0 : 1;
  const Eigen::Index last = right ? n : n - 1;
  const Eigen::Index m = last - first + 1;
  // Stiffness form sum_j a_{j+1/2}(u_{j+1}-u_j)^2/h + b_l u_0^2 + b_r u_n^2,
  // normalized by the boundary mass on the free ends.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub = Eigen::VectorXd::Zero(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index cell = 0; cell < n; ++cell) {
    const double k = field.values(cell) / grid.h;
    const Eigen::Index i = cell - first, j = cell + 1 - first;
    if (i >= 0 && i < m) diag(i) += k;
    if (j >= 0 && j < m) diag(j) += k;
    if (i >= 0 && j < m) sub(i) -= k;
  }
  if (left) diag(0) += left->b;
  if (right) diag(m - 1) += right->b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

State Trajectory::state_at_level(Eigen::Index n) const {
  if (n < 0 || n > steps) throw InvalidArgument("time level out of range");
  if (n == 0) return start;
  if (n == steps) return end;
  if (stride == 0 || n % stride != 0) throw InvalidArgument("time level was not recorded");
  const Eigen::Index col = n / stride;
  return {displacement.col(col), velocity.col(col), time(n)};
}

namespace {

// Kinetic weights at the end nodes: 1/2 (trapezoid) on free or homogeneous
// ends, 0 on ends driven by Dirichlet data, whose node is not a degree of freedom.
double energy_impl(const Grid1D& grid, const CoefficientField& field,
                   const Eigen::Ref<const Eigen::VectorXd>& y,
                   const Eigen::Ref<const Eigen::VectorXd>& v, double b_left, double b_right,
                   double w_left, double w_right) {
  const Eigen::Index n = grid.n_cells;
  double kinetic = w_left * v(0) * v(0) + w_right * v(n) * v(n);
  for (Eigen::Index j = 1; j < n; ++j) kinetic += v(j) * v(j);
  double potential = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    const double d = y(c + 1) - y(c);
    potential += field.values(c) * d * d;
  }
  return 0.5 * (grid.h * kinetic + potential / grid.h + b_left * y(0) * y(0) +
                b_right * y(n) * y(n));
}

double staggered_impl(const Grid1D& grid, const CoefficientField& field,
                      const Eigen::Ref<const Eigen::VectorXd>& y_now,
                      const Eigen::Ref<const Eigen::VectorXd>& y_next, double dt, double b_left,
                      double b_right, double w_left, double w_right) {
  const Eigen::Index n = grid.n_cells;
  auto vel = [&](Eigen::Index j) { return (y_next(j) - y_now(j)) / dt; };
  double kinetic = w_left * vel(0) * vel(0) + w_right * vel(n) * vel(n);
  for (Eigen::Index j = 1; j < n; ++j) kinetic += vel(j) * vel(j);
  double potential = 0.0;
  for (Eigen::Index c = 0; c < n; ++c)
    potential += field.values(c) * (y_now(c + 1) - y_now(c)) * (y_next(c + 1) - y_next(c));
  return 0.5 * (grid.h * kinetic + potential / grid.h + b_left * y_now(0) * y_next(0) +
                b_right * y_now(n) * y_next(n));
}

}  // namespace

double energy(const Grid1D& grid, const CoefficientField& field, const State& state,
              double b_left, double b_right) {
  return energy_impl(grid, field, state.y, state.v, b_left, b_right, 0.5, 0.5);
}

double staggered_energy(const Grid1D& grid, const CoefficientField& field,
                        const Eigen::Ref<const Eigen::VectorXd>& y_now,
                        const Eigen::Ref<const Eigen::VectorXd>& y_next, double dt,
                        double b_left, double b_right) {
  return staggered_impl(grid, field, y_now, y_next, dt, b_left, b_right, 0.5, 0.5);
}

namespace {

double flux_three_point(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& y, Side side) {
  const Eigen::Index n = grid.n_cells;
  if (side == Side::left) return (3.0 * y(0) - 4.0 * y(1) + y(2)) / (2.0 * grid.h);
  return (3.0 * y(n) - 4.0 * y(n - 1) + y(n - 2)) / (2.0 * grid.h);
}

double conormal_trace(const Grid1D& grid, const CoefficientField& field,
                      const Eigen::Ref<const Eigen::VectorXd>& y, Side side) {
  const Eigen::Index n = grid.n_cells;
  if (side == Side::left) return field.values(0) * (y(0) - y(1)) / grid.h;
  return field.values(n - 1) * (y(n) - y(n - 1)) / grid.h;
}

// Damping seen by one node: weight * law(v) in the nodal force balance.
struct NodeDamping {
  double weight = 0.0;
  const DampingLaw* law = nullptr;
};

class BoundaryValues {
 public:
  BoundaryValues(const BoundaryCondition& bc, Eigen::Index steps) : steps_(steps) {
    if (const auto* d = std::get_if<DirichletData>(&bc)) {
      if (d->signal.size() != steps + 1)
        throw InvalidArgument("Dirichlet signal must have one value per time level");
      signal_ = &d->signal;
    }
    free_ = std::holds_alternative<Dissipative>(bc);
  }

  bool free() const { return free_; }
  bool zero() const { return !free_ && signal_ == nullptr; }

  double at(Eigen::Index n) const {
    if (!signal_) return 0.0;
    const auto& s = *signal_;
    if (n < 0) return steps_ >= 1 ? 2.0 * s(0) - s(1) : s(0);
    if (n > steps_) return steps_ >= 1 ? 2.0 * s(steps_) - s(steps_ - 1) : s(steps_);
    return s(n);
  }

 private:
  Eigen::Index steps_;
  const Eigen::VectorXd* signal_ = nullptr;
  bool free_ = false;
};

void validate_setup(const Grid1D& grid, const CoefficientField& field, const State& initial,
                    const SimulationSetup& setup, Eigen::Index steps) {
  const Eigen::Index nodes = grid.node_count();
  if (field.values.size() != grid.n_cells)
    throw InvalidArgument("coefficient field does not match the grid");
  if (initial.y.size() != nodes || initial.v.size() != nodes)
    throw InvalidArgument("initial state does not match the grid");
  if (!(setup.cfl_limit > 0.0 && setup.cfl_limit <= 1.0))
    throw InvalidArgument("CFL limit must lie in (0, 1]");
  if (setup.record_stride < 0) throw InvalidArgument("record stride must be nonnegative");
  const double courant = setup.dt * std::sqrt(field.a1) / grid.h;
  if (courant > setup.cfl_limit * (1.0 + 1e-12)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "CFL violated: dt*sqrt(a1)/h = %.6g exceeds %.6g", courant,
                  setup.cfl_limit);
    throw CflError(buf);
  }
  const auto& f = setup.forcing;
  if (f.kind != ForcingSpec::Kind::none &&
      (f.field.rows() != nodes || f.field.cols() != steps + 1))
    throw InvalidArgument("forcing must be node_count x (steps + 1)");
  const auto& V = setup.reaction.potential;
  if (V.size() != 0 && (V.rows() != nodes || (V.cols() != 1 && V.cols() != steps + 1)))
    throw InvalidArgument("potential must be node_count x 1 or node_count x (steps + 1)");
  const auto& d = setup.damping;
  if (d.enabled) {
    if (d.weight.size() != nodes) throw InvalidArgument("damping weight must be nodal");
    if (d.weight.minCoeff() < 0.0) throw InvalidArgument("damping weight must be nonnegative");
  }
  bool any_b = false;
  for (Side side : {Side::left, Side::right}) {
    if (const auto* diss = std::get_if<Dissipative>(&setup.bc.on(side))) {
      if (!(diss->alpha >= 0.0) || !(diss->b >= 0.0))
        throw InvalidArgument("boundary alpha and b must be nonnegative");
      any_b = any_b || diss->b > 0.0;
    }
  }
  const bool both_free = std::holds_alternative<Dissipative>(setup.bc.left) &&
                         std::holds_alternative<Dissipative>(setup.bc.right);
  if (both_free && !any_b) {
    // Pure Neumann-type ends: energy is only a seminorm; allowed, nothing to check.
  } else if (any_b && boundary_rayleigh_minimum(grid, field, setup.bc) <= 0.0) {
    throw InvalidArgument("boundary energy is not positive definite");
  }
}

Trajectory run_forward(const Grid1D& grid, const CoefficientField& field, const State& initial,
                       const SimulationSetup& setup, Eigen::Index steps) {
  const Eigen::Index n = grid.n_cells;
  const Eigen::Index nodes = grid.node_count();
  const double h = grid.h;
  const double dt = setup.dt;

  const BoundaryValues left(setup.bc.left, steps);
  const BoundaryValues right(setup.bc.right, steps);
  const Dissipative* left_diss = std::get_if<Dissipative>(&setup.bc.left);
  const Dissipative* right_diss = std::get_if<Dissipative>(&setup.bc.right);
  const double b_left = left_diss ? left_diss->b : 0.0;
  const double b_right = right_diss ? right_diss->b : 0.0;
  const double w_left = left.free() || left.zero() ? 0.5 : 0.0;
  const double w_right = right.free() || right.zero() ? 0.5 : 0.0;

  Eigen::VectorXd mass = Eigen::VectorXd::Constant(nodes, h);
  mass(0) = mass(n) = 0.5 * h;

  // Nodal damping; a free end carrying both internal and boundary damping
  // gets one combined law.
  std::vector<NodeDamping> damp(static_cast<std::size_t>(nodes));
  std::optional<DampingLaw> combined_left, combined_right;
  bool damped = false;
  if (setup.damping.enabled) {
    for (Eigen::Index j = 0; j < nodes; ++j) {
      const double w = setup.damping.weight(j) * mass(j);
      if (w > 0.0) damp[j] = {w, &setup.damping.law};
    }
  }
  auto attach_boundary = [&](Eigen::Index j, const Dissipative* diss,
                             std::optional<DampingLaw>& combined) {
    if (!diss || diss->alpha == 0.0) return;
    if (damp[j].law == nullptr) {
      damp[j] = {diss->alpha, &diss->law};
      return;
    }
    const double wi = damp[j].weight, wb = diss->alpha;
    const DampingLaw* li = damp[j].law;
    const DampingLaw* lb = &diss->law;
    DampingLaw law;
    law.name = "combined";
    law.g = [=](double s) { return wi * li->g(s) + wb * lb->g(s); };
    if (li->g_prime && lb->g_prime)
      law.g_prime = [=](double s) { return wi * li->g_prime(s) + wb * lb->g_prime(s); };
    if (li->linear_gain && lb->linear_gain)
      law.linear_gain = wi * *li->linear_gain + wb * *lb->linear_gain;
    combined = std::move(law);
    damp[j] = {1.0, &*combined};
  };
  attach_boundary(0, left_diss, combined_left);
  attach_boundary(n, right_diss, combined_right);
  for (const auto& d : damp) damped = damped || d.law != nullptr;

  const bool has_forcing = setup.forcing.kind != ForcingSpec::Kind::none;
  const auto& V = setup.reaction.potential;
  const auto& fnl = setup.reaction.nonlinearity;
  const double source = setup.reaction.source;

  // Nodal force: stiffness + zeroth-order terms + forcing, weighted by the mass.
  Eigen::VectorXd force(nodes);
  auto compute_force = [&](const Eigen::VectorXd& y, Eigen::Index level) {
    const Eigen::Index vcol = V.cols() == 1 ? 0 : level;
    for (Eigen::Index j = 0; j < nodes; ++j) {
      double local = source;
      if (has_forcing) local += setup.forcing.field(j, level);
      if (V.size() != 0) local -= V(j, vcol) * y(j);
      if (fnl) local -= fnl(y(j));
      double stiff = 0.0;
      if (j > 0) stiff -= field.values(j - 1) * (y(j) - y(j - 1)) / h;
      if (j < n) stiff += field.values(j) * (y(j + 1) - y(j)) / h;
      force(j) = stiff + mass(j) * local;
    }
    force(0) -= b_left * y(0);
    force(n) -= b_right * y(n);
  };
  auto g_of = [&](Eigen::Index j, double v) {
    const auto& d = damp[j];
    return d.law ? d.weight * d.law->g(v) : 0.0;
  };
  auto is_free = [&](Eigen::Index j) {
    if (j == 0) return left.free();
    if (j == n) return right.free();
    return true;
  };
  auto impose = [&](Eigen::VectorXd& y, Eigen::Index level) {
    if (!left.free()) y(0) = left.at(level);
    if (!right.free()) y(n) = right.at(level);
  };
  auto check_growth = [&](const Eigen::VectorXd& y, Eigen::Index level) {
    const double amp = y.cwiseAbs().maxCoeff();
    if (!std::isfinite(amp) || amp > setup.growth_limit) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "solution left the growth bound at step %lld (|y| = %.6g)",
                    static_cast<long long>(level), amp);
      throw NumericalError(buf);
    }
  };

  Trajectory traj;
  traj.grid = grid;
  traj.field = field;
  traj.dt = dt;
  traj.steps = steps;
  traj.stride = setup.record_stride;
  traj.time.resize(steps + 1);
  for (Eigen::Index k = 0; k <= steps; ++k) traj.time(k) = initial.t + static_cast<double>(k) * dt;
  traj.energy.resize(steps + 1);
  traj.energy_staggered.resize(steps + 1);
  traj.dissipation.resize(steps + 1);
  traj.flux_left.resize(steps + 1);
  traj.flux_right.resize(steps + 1);
  traj.trace_left.resize(steps + 1);
  traj.trace_right.resize(steps + 1);
  traj.left_dirichlet_zero = left.zero();
  traj.right_dirichlet_zero = right.zero();
  traj.damped = damped;
  traj.forced = has_forcing || (!left.free() && !left.zero()) || (!right.free() && !right.zero());
  traj.b_left = b_left;
  traj.b_right = b_right;

  const Eigen::Index stride = setup.record_stride;
  const Eigen::Index columns = stride == 0 ? 2 : steps / stride + 1;
  traj.displacement.resize(nodes, columns);
  traj.velocity.resize(nodes, columns);
  auto record = [&](Eigen::Index level, const Eigen::VectorXd& y, const Eigen::VectorXd& v) {
    traj.flux_left(level) = flux_three_point(grid, y, Side::left);
    traj.flux_right(level) = flux_three_point(grid, y, Side::right);
    traj.trace_left(level) = conormal_trace(grid, field, y, Side::left);
    traj.trace_right(level) = conormal_trace(grid, field, y, Side::right);
    double diss = 0.0;
    for (Eigen::Index j = 0; j < nodes; ++j) diss += g_of(j, v(j)) * v(j);
    traj.dissipation(level) = diss;
    const State s{y, v, traj.time(level)};
    traj.energy(level) = energy_impl(grid, field, y, v, b_left, b_right, w_left, w_right);
    if (stride == 0) {
      if (level == 0) {
        traj.displacement.col(0) = y;
        traj.velocity.col(0) = v;
      }
      if (level == steps) {
        traj.displacement.col(1) = y;
        traj.velocity.col(1) = v;
      }
    } else if (level % stride == 0) {
      traj.displacement.col(level / stride) = y;
      traj.velocity.col(level / stride) = v;
    }
    if (level == 0) traj.start = s;
    if (level == steps) traj.end = s;
  };

  Eigen::VectorXd y_prev = initial.y;
  impose(y_prev, 0);
  Eigen::VectorXd v0 = initial.v;
  if (!left.free()) v0(0) = (left.at(1) - left.at(-1)) / (2.0 * dt);
  if (!right.free()) v0(n) = (right.at(1) - right.at(-1)) / (2.0 * dt);
  check_growth(y_prev, 0);

  // Taylor start: the centered scheme with y^{-1} = y^1 - 2 dt v^0.
  Eigen::VectorXd y_cur(nodes);
  compute_force(y_prev, 0);
  for (Eigen::Index j = 0; j < nodes; ++j)
    y_cur(j) = y_prev(j) + dt * v0(j) + 0.5 * dt * dt * (force(j) - g_of(j, v0(j))) / mass(j);
  impose(y_cur, 1);
  check_growth(y_cur, 1);
  {
    Eigen::VectorXd y_before = y_cur - 2.0 * dt * v0;
    if (!left.free()) y_before(0) = left.at(-1);
    if (!right.free()) y_before(n) = right.at(-1);
    traj.energy_staggered_before =
        staggered_impl(grid, field, y_before, y_prev, dt, b_left, b_right, w_left, w_right);
  }
  record(0, y_prev, v0);

  Eigen::VectorXd y_next(nodes), v(nodes);
  for (Eigen::Index level = 1; level <= steps; ++level) {
    traj.energy_staggered(level - 1) =
        staggered_impl(grid, field, y_prev, y_cur, dt, b_left, b_right, w_left, w_right);
    compute_force(y_cur, level);
    for (Eigen::Index j = 0; j < nodes; ++j) {
      if (!is_free(j)) continue;
      const double m = mass(j);
      const auto& d = damp[j];
      if (d.law) {
        const double rhs = force(j) + 2.0 * m * (y_cur(j) - y_prev(j)) / (dt * dt);
        const double vel = solve_damped_velocity(2.0 * m / dt, d.weight, *d.law, rhs);
        y_next(j) = y_prev(j) + 2.0 * dt * vel;
      } else {
        y_next(j) = 2.0 * y_cur(j) - y_prev(j) + dt * dt * force(j) / m;
      }
    }
    impose(y_next, level + 1);
    if (level < steps) check_growth(y_next, level + 1);
    v = (y_next - y_prev) / (2.0 * dt);
    record(level, y_cur, v);
    y_prev.swap(y_cur);
    y_cur.swap(y_next);
  }
  traj.energy_staggered(steps) = staggered_impl(grid, field, y_prev, y_cur, dt, b_left, b_right, w_left, w_right);
  return traj;
}

Eigen::MatrixXd reverse_columns(const Eigen::MatrixXd& m) { return m.rowwise().reverse(); }

}  // namespace

Trajectory simulate(const Grid1D& grid, const CoefficientField& field, const State& initial,
                    const SimulationSetup& setup) {
  const Eigen::Index steps = step_count(setup.horizon, setup.dt);
  validate_setup(grid, field, initial, setup, steps);
  if (setup.direction == Direction::forward) return run_forward(grid, field, initial, setup, steps);

  // Backward: the scheme is time reversible, so solve the time-reflected
  // problem forward from the terminal state and reflect back.
  if (setup.damping.enabled || std::holds_alternative<Dissipative>(setup.bc.left) ||
      std::holds_alternative<Dissipative>(setup.bc.right))
    throw InvalidArgument("backward solves require an undamped system with Dirichlet ends");
  if (setup.record_stride > 1)
    throw InvalidArgument("backward solves record every level or only the end states");

  SimulationSetup reflected = setup;
  reflected.direction = Direction::forward;
  for (Side side : {Side::left, Side::right}) {
    if (auto* d = std::get_if<DirichletData>(&reflected.bc.on(side)))
      d->signal = Eigen::VectorXd(d->signal.reverse());
  }
  if (reflected.forcing.kind != ForcingSpec::Kind::none)
    reflected.forcing.field = reverse_columns(setup.forcing.field);
  if (reflected.reaction.potential.cols() > 1)
    reflected.reaction.potential = reverse_columns(setup.reaction.potential);
  const double t_start = initial.t - setup.horizon;
  State terminal{initial.y, -initial.v, t_start};
  Trajectory r = run_forward(grid, field, terminal, reflected, steps);

  Trajectory out = r;
  for (Eigen::Index k = 0; k <= steps; ++k) out.time(k) = t_start + static_cast<double>(k) * setup.dt;
  out.displacement = reverse_columns(r.displacement);
  out.velocity = -reverse_columns(r.velocity);
  out.start = {r.end.y, -r.end.v, t_start};
  out.end = {r.start.y, -r.start.v, initial.t};
  out.energy = r.energy.reverse();
  out.dissipation = r.dissipation.reverse();
  out.flux_left = r.flux_left.reverse();
  out.flux_right = r.flux_right.reverse();
  out.trace_left = r.trace_left.reverse();
  out.trace_right = r.trace_right.reverse();
  for (Eigen::Index k = 0; k < steps; ++k) out.energy_staggered(k) = r.energy_staggered(steps - 1 - k);
  out.energy_staggered(steps) = r.energy_staggered_before;
  out.energy_staggered_before = r.energy_staggered(steps);
  return out;
}

Eigen::VectorXd boundary_flux(const Trajectory& trajectory, Side side) {
  const bool zero = side == Side::left ? trajectory.left_dirichlet_zero
                                       : trajectory.right_dirichlet_zero;
  if (!zero) throw InvalidArgument("boundary flux is defined on homogeneous Dirichlet sides only");
  return side == Side::left ? trajectory.flux_left : trajectory.flux_right;
}

double BalanceReport::max_relative() const {
  if (residual.size() == 0) return 0.0;
  const double worst = residual.cwiseAbs().maxCoeff();
  if (reference_energy == 0.0) return worst;
  return worst / reference_energy;
}

BalanceReport dissipation_balance(const Trajectory& t, BalanceKind kind) {
  if (t.forced) throw InvalidArgument("energy balance needs an unforced trajectory");
  BalanceReport report;
  report.degenerate = !t.damped;
  const Eigen::Index m = t.steps;
  report.residual.resize(m + 1);
  if (kind == BalanceKind::staggered) {
    report.reference_energy = t.energy_staggered_before;
    double spent = 0.0;
    for (Eigen::Index k = 0; k <= m; ++k) {
      spent += t.dt * t.dissipation(k);
      report.residual(k) = t.energy_staggered(k) - t.energy_staggered_before + spent;
    }
  } else {
    report.reference_energy = t.energy(0);
    double spent = 0.0;
    report.residual(0) = 0.0;
    for (Eigen::Index k = 1; k <= m; ++k) {
      spent += 0.5 * t.dt * (t.dissipation(k - 1) + t.dissipation(k));
      report.residual(k) = t.energy(k) - t.energy(0) + spent;
    }
  }
  return report;
}

FullDomainControl full_domain_control(const Grid1D& grid, const CoefficientField& field,
                                      const State& initial, double horizon, double dt) {
  if (dt == 0.0) dt = stable_dt(grid, field, horizon);
  const Eigen::Index steps = step_count(horizon, dt);
  const Eigen::Index nodes = grid.node_count();
  const Eigen::Index n = grid.n_cells;
  if (initial.y.size() != nodes || initial.v.size() != nodes)
    throw InvalidArgument("initial state does not match the grid");

  Eigen::VectorXd y0 = initial.y, y1 = initial.v;
  y0(0) = y0(n) = y1(0) = y1(n) = 0.0;
  auto path = [&](Eigen::Index level) -> Eigen::VectorXd {
    if (level >= steps) return Eigen::VectorXd::Zero(nodes);
    const double s = static_cast<double>(level) / static_cast<double>(steps);
    const double a = 1.0 - 3.0 * s * s + 2.0 * s * s * s;
    const double b = horizon * (s - 2.0 * s * s + s * s * s);
    return a * y0 + b * y1;
  };
  auto stiffness = [&](const Eigen::VectorXd& y) {
    return with_zero_ends(apply_operator(grid, field, interior_of(y)));
  };

  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(nodes, steps + 1);
  Eigen::VectorXd prev = path(0), cur = path(1), next;
  f.col(0) = 2.0 * (cur - prev - dt * y1) / (dt * dt) - stiffness(prev);
  for (Eigen::Index k = 1; k < steps; ++k) {
    next = path(k + 1);
    f.col(k) = (next - 2.0 * cur + prev) / (dt * dt) - stiffness(cur);
    prev.swap(cur);
    cur.swap(next);
  }
  // Level M: choose y^{M+1} = y^{M-1} so the replayed velocity vanishes at T.
  f.col(steps) = (2.0 * prev - 2.0 * cur) / (dt * dt) - stiffness(cur);
  f.row(0).setZero();
  f.row(n).setZero();

  FullDomainControl out;
  out.forcing = ForcingSpec::full_domain(f);
  SimulationSetup setup;
  setup.forcing = out.forcing;
  setup.horizon = horizon;
  setup.dt = dt;
  out.trajectory = simulate(grid, field, State{y0, y1, initial.t}, setup);
  return out;
}

Eigen::VectorXd nodal_derivative(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = grid.n_cells;
  Eigen::VectorXd d(n + 1);
  for (Eigen::Index j = 1; j < n; ++j) d(j) = (y(j + 1) - y(j - 1)) / (2.0 * grid.h);
  d(0) = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * grid.h);
  d(n) = (3.0 * y(n) - 4.0 * y(n - 1) + y(n - 2)) / (2.0 * grid.h);
  return d;
}

namespace {

double trapezoid(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::Index n = u.size() - 1;
  return grid.h * (u.sum() - 0.5 * (u(0) + u(n)));
}

double time_trapezoid(double dt, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::Index n = u.size() - 1;
  return dt * (u.sum() - 0.5 * (u(0) + u(n)));
}

void require_full_dirichlet(const Trajectory& t) {
  if (!t.full_record()) throw InvalidArgument("identity checks need every time level recorded");
  if (!t.left_dirichlet_zero || !t.right_dirichlet_zero)
    throw InvalidArgument("identity checks need homogeneous Dirichlet ends");
}

IdentityResidual finish(double lhs, double rhs, double scale) {
  IdentityResidual r;
  r.lhs = lhs;
  r.rhs = rhs;
  const double denom = scale > 0.0 ? scale : std::abs(lhs) + std::abs(rhs);
  r.relative = denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
  return r;
}

}  // namespace

IdentityResidual multiplier_identity(const Trajectory& t,
                                     const Eigen::Ref<const Eigen::VectorXd>& q,
                                     const Eigen::MatrixXd& forcing) {
  require_full_dirichlet(t);
  const Grid1D& g = t.grid;
  const Eigen::Index nodes = g.node_count();
  if (!t.field.is_constant() || std::abs(t.field.a0 - 1.0) > 1e-12)
    throw InvalidArgument("the multiplier identity is implemented for a = 1");
  if (q.size() != nodes) throw InvalidArgument("multiplier must be nodal");
  if (forcing.size() != 0 && (forcing.rows() != nodes || forcing.cols() != t.steps + 1))
    throw InvalidArgument("forcing must be node_count x (steps + 1)");

  const Eigen::Index m = t.steps;
  const double lhs =
      0.5 * (q(nodes - 1) * time_trapezoid(t.dt, t.flux_right.array().square().matrix()) -
             q(0) * time_trapezoid(t.dt, t.flux_left.array().square().matrix()));

  const Eigen::VectorXd qx = nodal_derivative(g, q);
  Eigen::VectorXd volume(m + 1), work(m + 1);
  double boundary_terms = 0.0;
  for (Eigen::Index k = 0; k <= m; ++k) {
    const auto y = t.displacement.col(k);
    const auto v = t.velocity.col(k);
    const Eigen::VectorXd yx = nodal_derivative(g, y);
    volume(k) = trapezoid(g, (qx.array() * (v.array().square() + yx.array().square())).matrix());
    work(k) = forcing.size() == 0
                  ? 0.0
                  : trapezoid(g, (forcing.col(k).array() * q.array() * yx.array()).matrix());
    if (k == 0 || k == m) {
      const double val = trapezoid(g, (v.array() * q.array() * yx.array()).matrix());
      boundary_terms += k == 0 ? -val : val;
    }
  }
  const double rhs =
      boundary_terms + 0.5 * time_trapezoid(t.dt, volume) - time_trapezoid(t.dt, work);
  return finish(lhs, rhs, 0.0);
}

double multiplier_identity_residual(const Trajectory& t,
                                    const Eigen::Ref<const Eigen::VectorXd>& q,
                                    const Eigen::MatrixXd& forcing) {
  return multiplier_identity(t, q, forcing).relative;
}

IdentityResidual equipartition(const Trajectory& t) {
  require_full_dirichlet(t);
  const Grid1D& g = t.grid;
  const Eigen::Index m = t.steps;
  Eigen::VectorXd a_nodes(g.node_count());
  for (Eigen::Index j = 0; j < g.node_count(); ++j) a_nodes(j) = t.field.at_node(j);
  Eigen::VectorXd density(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) {
    const auto y = t.displacement.col(k);
    const auto v = t.velocity.col(k);
    const Eigen::VectorXd yx = nodal_derivative(g, y);
    density(k) =
        trapezoid(g, (v.array().square() - a_nodes.array() * yx.array().square()).matrix());
  }
  auto pairing = [&](Eigen::Index k) {
    return trapezoid(g, (t.velocity.col(k).array() * t.displacement.col(k).array()).matrix());
  };
  const double lhs = pairing(m) - pairing(0);
  const double rhs = time_trapezoid(t.dt, density);
  const double horizon = t.time(m) - t.time(0);
  const double scale = horizon * t.energy(0);
  IdentityResidual r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.relative = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
  return r;
}

double equipartition_residual(const Trajectory& t) { return equipartition(t).relative; }

void write_trajectory_csv(const Trajectory& t, const std::string& path) {
  write_columns_csv(path, {"t", "E", "flux_left", "flux_right"},
                    {t.time, t.energy, t.flux_left, t.flux_right});
}

void write_snapshot_csv(const Trajectory& t, Eigen::Index level, const std::string& path) {
  const State s = t.state_at_level(level);
  write_columns_csv(path, {"x", "y", "v"}, {t.grid.nodes(), s.y, s.v});
}

}  // namespace wavelab
