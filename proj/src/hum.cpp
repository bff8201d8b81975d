#include "wavelab/hum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wavelab/errors.hpp"
#include "wavelab/io.hpp"
#include "wavelab/observability.hpp"

namespace wavelab {

std::string ControlRegion::label() const {
  if (kind == Kind::boundary) return side == Side::left ? "boundary_left" : "boundary_right";
  return "internal[" + std::to_string(first) + "," + std::to_string(last) + "]";
}

double HUMProblem::time_step() const {
  return dt > 0.0 ? dt : stable_dt(grid, field, horizon, cfl);
}

double HUMProblem::time_weight(double t) const {
  if (ramp_fraction <= 0.0) return 1.0;
  const double width = std::min(ramp_fraction, 0.5) * horizon;
  auto step = [](double r) {
    r = std::clamp(r, 0.0, 1.0);
    return r * r * r * (10.0 - 15.0 * r + 6.0 * r * r);
  };
  return step(t / width) * step((horizon - t) / width);
}

Eigen::Index HUMProblem::steps() const { return step_count(horizon, time_step()); }

Eigen::Index HUMProblem::kept_modes() const { return kept_mode_count(grid, filter_fraction); }

double HUMProblem::threshold_time() const {
  const double speed = std::sqrt(field.a0);
  if (region.kind == ControlRegion::Kind::boundary)
    return 2.0 * (grid.x_right - grid.x_left) / speed;
  const double gap = std::max(grid.node(region.first) - grid.x_left,
                              grid.x_right - grid.node(region.last));
  return 2.0 * gap / speed;
}

void HUMProblem::validate() const {
  if (!(horizon > 0.0)) throw InvalidArgument("HUM horizon must be positive");
  if (!(filter_fraction > 0.0 && filter_fraction <= 1.0))
    throw InvalidArgument("filter fraction must lie in (0, 1]");
  if (field.values.size() != grid.n_cells)
    throw InvalidArgument("coefficient field does not match the grid");
  if (region.kind == ControlRegion::Kind::internal &&
      (region.first < 0 || region.last < region.first || region.last > grid.n_cells))
    throw InvalidArgument("control region must be a non-empty node range inside the grid");
  if (!(ramp_fraction >= 0.0)) throw InvalidArgument("ramp fraction must be non-negative");
  if (!(cg.tol > 0.0)) throw InvalidArgument("CG tolerance must be positive");
  const Eigen::Index m = steps();
  if (potential.size() != 0 &&
      (potential.rows() != grid.node_count() || (potential.cols() != 1 && potential.cols() != m + 1)))
    throw InvalidArgument("potential must be node_count x 1 or node_count x (steps + 1)");
}

namespace {

double control_sum(const Control& c, const Grid1D& grid, bool weighted) {
  const bool boundary = c.region.kind == ControlRegion::Kind::boundary;
  const Eigen::Index m = (boundary ? c.signal.size() : c.field.cols()) - 1;
  if (m < 1) return 0.0;
  double total = 0.0;
  for (Eigen::Index k = 0; k <= m; ++k) {
    double eta = 1.0;
    if (weighted && c.weight.size() != 0) {
      eta = c.weight(k);
      if (eta <= 0.0) continue;  // the control vanishes there
    }
    const double v = boundary ? c.signal(k) * c.signal(k)
                              : c.field.col(k)
                                    .segment(c.region.first, c.region.last - c.region.first + 1)
                                    .squaredNorm();
    total += ((k == 0 || k == m) ? 0.5 : 1.0) * v / eta;
  }
  return boundary ? c.dt * total : c.dt * grid.h * total;
}

}  // namespace

double Control::norm_sq(const Grid1D& grid) const { return control_sum(*this, grid, true); }

double Control::l2_norm_sq(const Grid1D& grid) const { return control_sum(*this, grid, false); }

Control Control::scaled(double s) const {
  Control c = *this;
  c.signal *= s;
  c.field *= s;
  return c;
}

nlohmann::json VerificationRecord::to_json() const {
  nlohmann::json j;
  j["initial_energy"] = initial_energy;
  j["terminal_energy"] = terminal_energy;
  j["terminal_energy_ratio"] = terminal_energy_ratio;
  j["zero_initial_energy"] = zero_initial_energy;
  j["control_norm_sq"] = control_norm_sq;
  return j;
}

nlohmann::json HUMSolution::diagnostics_json() const {
  nlohmann::json j;
  j["cg_history"] = cg_history;
  j["iterations"] = iterations;
  j["kept_modes"] = kept_modes;
  j["control_norm_sq"] = control_norm_sq;
  j["terminal_energy_ratio"] = verification.terminal_energy_ratio;
  j["verification"] = verification.to_json();
  j["threshold_time"] = threshold_time;
  j["below_threshold"] = below_threshold;
  return j;
}

namespace {

ModeSet kept_basis(const HUMProblem& p) {
  return dirichlet_eigenpairs(p.grid, p.field, p.kept_modes());
}

Eigen::VectorXd to_modal(const Grid1D& g, const ModeSet& m, const Eigen::VectorXd& interior) {
  return g.h * (m.eigenvectors.transpose() * interior);
}

}  // namespace

Eigen::VectorXd spectral_filter(const Grid1D& grid, const CoefficientField& field,
                                const Eigen::Ref<const Eigen::VectorXd>& interior,
                                double filter_fraction) {
  if (interior.size() != grid.interior_count())
    throw InvalidArgument("filter input must be an interior vector");
  const Eigen::Index k = kept_mode_count(grid, filter_fraction);
  if (k == grid.interior_count()) return interior;
  const ModeSet m = dirichlet_eigenpairs(grid, field, k);
  return m.eigenvectors * to_modal(grid, m, interior);
}

State spectral_filter(const Grid1D& grid, const CoefficientField& field, const State& state,
                      double filter_fraction) {
  return state_from_interior(
      spectral_filter(grid, field, interior_of(state.y), filter_fraction),
      spectral_filter(grid, field, interior_of(state.v), filter_fraction), state.t);
}

Trajectory adjoint_trajectory(const HUMProblem& p, const AdjointData& data) {
  if (data.phi0.size() != p.grid.interior_count() || data.phi1.size() != p.grid.interior_count())
    throw InvalidArgument("adjoint data must be interior vectors");
  SimulationSetup s;
  s.horizon = p.horizon;
  s.dt = p.time_step();
  s.reaction.potential = p.potential;
  s.record_stride = p.region.kind == ControlRegion::Kind::internal ? 1 : 0;
  return simulate(p.grid, p.field, state_from_interior(data.phi0, data.phi1), s);
}

Control observation_control(const HUMProblem& p, const Trajectory& adjoint) {
  Control c;
  c.region = p.region;
  c.dt = adjoint.dt;
  c.time = adjoint.time;
  const Eigen::Index m = adjoint.steps;
  c.weight.resize(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) c.weight(k) = p.time_weight(c.time(k) - c.time(0));
  c.weight(0) = c.weight(m) = 0.0;
  if (p.region.kind == ControlRegion::Kind::boundary) {
    c.signal = (p.region.side == Side::left ? adjoint.trace_left : adjoint.trace_right)
                   .cwiseProduct(c.weight);
    return c;
  }
  if (!adjoint.full_record()) throw InvalidArgument("internal control needs every time level");
  c.field = Eigen::MatrixXd::Zero(p.grid.node_count(), m + 1);
  const Eigen::Index width = p.region.last - p.region.first + 1;
  for (Eigen::Index k = 1; k < m; ++k)
    c.field.col(k).segment(p.region.first, width) =
        -c.weight(k) * adjoint.displacement.col(k).segment(p.region.first, width);
  return c;
}

SimulationSetup controlled_setup(const HUMProblem& p, const Control& control,
                                 Direction direction) {
  SimulationSetup s;
  s.horizon = p.horizon;
  s.dt = p.time_step();
  s.direction = direction;
  s.reaction.potential = p.potential;
  if (control.region.kind == ControlRegion::Kind::boundary) {
    s.bc.on(control.region.side) = DirichletData{control.signal};
  } else {
    s.forcing = ForcingSpec::internal(control.field, control.region.first, control.region.last);
  }
  return s;
}

namespace {

std::pair<Eigen::VectorXd, Eigen::VectorXd> lambda_raw(const HUMProblem& p,
                                                       const AdjointData& data) {
  const Trajectory adj = adjoint_trajectory(p, data);
  const Control c = observation_control(p, adj);
  SimulationSetup s = controlled_setup(p, c, Direction::backward);
  s.record_stride = 0;
  const Trajectory back = simulate(p.grid, p.field, zero_state(p.grid, p.horizon), s);
  return {interior_of(back.start.v), -interior_of(back.start.y)};
}

Eigen::VectorXd apply_modal(const HUMProblem& p, const ModeSet& m, const Eigen::VectorXd& c) {
  const Eigen::Index k = m.count();
  const AdjointData d{m.eigenvectors * c.head(k), m.eigenvectors * c.tail(k)};
  const auto out = lambda_raw(p, d);
  Eigen::VectorXd r(2 * k);
  r.head(k) = to_modal(p.grid, m, out.first);
  r.tail(k) = to_modal(p.grid, m, out.second);
  return r;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> apply_lambda(const HUMProblem& p,
                                                         const AdjointData& data) {
  p.validate();
  auto out = lambda_raw(p, data);
  out.first = spectral_filter(p.grid, p.field, out.first, p.filter_fraction);
  out.second = spectral_filter(p.grid, p.field, out.second, p.filter_fraction);
  return out;
}

double duality_pairing(const Grid1D& grid,
                       const std::pair<Eigen::VectorXd, Eigen::VectorXd>& lambda_out,
                       const AdjointData& theta) {
  return grid.h * (lambda_out.first.dot(theta.phi0) + lambda_out.second.dot(theta.phi1));
}

double observation_norm_sq(const HUMProblem& p, const AdjointData& data) {
  p.validate();
  return observation_control(p, adjoint_trajectory(p, data)).norm_sq(p.grid);
}

HUMSolution solve_hum_shifted(const HUMProblem& p, const State& shifted) {
  p.validate();
  const Grid1D& g = p.grid;
  if (shifted.y.size() != g.node_count() || shifted.v.size() != g.node_count())
    throw InvalidArgument("initial state does not match the grid");
  const ModeSet m = kept_basis(p);
  const Eigen::Index k = m.count();
  const Eigen::Index dim = 2 * k;

  HUMSolution sol;
  sol.kept_modes = k;
  sol.threshold_time = p.threshold_time();
  sol.below_threshold = p.horizon <= sol.threshold_time;

  Eigen::VectorXd b(dim);
  b.head(k) = to_modal(g, m, interior_of(shifted.v));
  b.tail(k) = -to_modal(g, m, interior_of(shifted.y));

  // Energy preconditioner: Lambda acts like a multiple of diag(lambda_k, 1).
  Eigen::VectorXd precond(dim);
  precond.head(k) = m.eigenvalues.cwiseInverse();
  precond.tail(k).setOnes();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precond.cwiseProduct(r);
  double rz = r.dot(z);
  const double res0 = std::sqrt(std::max(rz, 0.0));
  if (res0 > 0.0) {
    const Eigen::Index max_iter = p.cg.max_iter > 0 ? p.cg.max_iter : dim;
    Eigen::VectorXd dir = z;
    double best = res0;
    Eigen::Index since_best = 0;
    bool converged = false;
    for (Eigen::Index it = 1; it <= max_iter; ++it) {
      const Eigen::VectorXd q = apply_modal(p, m, dir);
      const double curvature = dir.dot(q);
      if (!(curvature > 0.0)) {
        throw SolverError("CG met a non-positive direction; the observation does not control "
                          "the kept modes",
                          sol.cg_history);
      }
      const double alpha = rz / curvature;
      x += alpha * dir;
      r -= alpha * q;
      z = precond.cwiseProduct(r);
      const double rz_new = r.dot(z);
      const double res = std::sqrt(std::max(rz_new, 0.0));
      sol.cg_history.push_back(res);
      sol.iterations = it;
      if (res <= p.cg.tol * res0) {
        converged = true;
        break;
      }
      if (res < best) {
        best = res;
        since_best = 0;
      } else if (++since_best >= p.cg.stagnation_window) {
        throw SolverError("CG stagnated", sol.cg_history);
      }
      dir = z + (rz_new / rz) * dir;
      rz = rz_new;
    }
    if (!converged) throw SolverError("CG reached max_iter without converging", sol.cg_history);
  }

  sol.adjoint = {m.eigenvectors * x.head(k), m.eigenvectors * x.tail(k)};
  sol.control = observation_control(p, adjoint_trajectory(p, sol.adjoint));
  sol.control_norm_sq = sol.control.norm_sq(g);
  return sol;
}

Trajectory target_trajectory(const HUMProblem& p, const State& target) {
  SimulationSetup s;
  s.horizon = p.horizon;
  s.dt = p.time_step();
  s.direction = Direction::backward;
  s.reaction.potential = p.potential;
  s.record_stride = 0;
  return simulate(p.grid, p.field, State{target.y, target.v, p.horizon}, s);
}

VerificationRecord verify_control(const HUMProblem& p, const Control& control,
                                  const State& initial, const std::optional<State>& target) {
  p.validate();
  VerificationRecord rec;
  State z0 = zero_state(p.grid);
  State zT = zero_state(p.grid, p.horizon);
  if (target) {
    const Trajectory z = target_trajectory(p, *target);
    z0 = z.start;
    zT = z.end;
  }
  rec.replay = simulate(p.grid, p.field, State{initial.y, initial.v, 0.0},
                        controlled_setup(p, control, Direction::forward));
  // End nodes are not degrees of freedom; their velocity carries the boundary data.
  auto difference = [&](const State& a, const State& b) {
    State d{a.y - b.y, a.v - b.v, a.t};
    d.v(0) = d.v(d.v.size() - 1) = 0.0;
    return d;
  };
  rec.initial_energy = energy(p.grid, p.field, difference(State{initial.y, initial.v, 0.0}, z0));
  rec.terminal_energy = energy(p.grid, p.field, difference(rec.replay.end, zT));
  rec.zero_initial_energy = rec.initial_energy == 0.0;
  if (rec.zero_initial_energy)
    rec.terminal_energy_ratio = rec.terminal_energy == 0.0 ? 0.0 : HUGE_VAL;
  else
    rec.terminal_energy_ratio = rec.terminal_energy / rec.initial_energy;
  rec.control_norm_sq = control.norm_sq(p.grid);
  return rec;
}

HUMSolution solve_hum(const HUMProblem& p, const State& initial,
                      const std::optional<State>& target) {
  State shifted = initial;
  if (target) {
    const Trajectory z = target_trajectory(p, *target);
    shifted.y -= z.start.y;
    shifted.v -= z.start.v;
  }
  HUMSolution sol = solve_hum_shifted(p, shifted);
  sol.verification = verify_control(p, sol.control, initial, target);
  return sol;
}

TwoStageControl two_stage_control(const HUMProblem& p, const State& initial,
                                  const Eigen::Ref<const Eigen::VectorXd>& w, double eps) {
  p.validate();
  if (p.region.kind != ControlRegion::Kind::boundary)
    throw InvalidArgument("two-stage controls are built for boundary control");
  if (p.potential.cols() > 1)
    throw InvalidArgument("two-stage controls need a time-independent potential");
  const double dt = p.time_step();
  const Eigen::Index first = step_count(eps, dt);
  if (!(p.horizon - eps > p.threshold_time()))
    throw InvalidArgument("eps too large: T - eps must exceed the control time");
  if (w.size() != first + 1) throw InvalidArgument("w must have one value per level of (0, eps)");
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  if (std::abs(w(0)) > 1e-14 * scale || std::abs(w(first)) > 1e-14 * scale)
    throw InvalidArgument("w must vanish at t = 0 and t = eps");

  SimulationSetup s;
  s.horizon = eps;
  s.dt = dt;
  s.reaction.potential = p.potential;
  s.record_stride = 0;
  s.bc.on(p.region.side) = DirichletData{w};
  const Trajectory stage1 = simulate(p.grid, p.field, State{initial.y, initial.v, 0.0}, s);

  HUMProblem rest = p;
  rest.horizon = p.horizon - eps;
  rest.dt = dt;
  TwoStageControl out;
  out.switch_level = first;
  out.second_stage = solve_hum(rest, State{stage1.end.y, stage1.end.v, 0.0});

  const Eigen::Index m = p.steps();
  Control& c = out.control;
  c.region = p.region;
  c.dt = dt;
  c.time.resize(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) c.time(k) = static_cast<double>(k) * dt;
  // Weighted as a single-stage HUM control on (0, T), for norm comparisons.
  c.weight.resize(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) c.weight(k) = p.time_weight(c.time(k));
  c.weight(0) = c.weight(m) = 0.0;
  c.signal.resize(m + 1);
  c.signal.head(first + 1) = w;
  c.signal.segment(first, m - first + 1) = out.second_stage.control.signal;
  return out;
}

void write_control_csv(const Grid1D& grid, const Control& control, const std::string& path) {
  if (control.region.kind == ControlRegion::Kind::boundary) {
    write_columns_csv(path, {"t", "value"}, {control.time, control.signal});
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << "t,x,value\n";
  for (Eigen::Index k = 0; k < control.field.cols(); ++k)
    for (Eigen::Index j = control.region.first; j <= control.region.last; ++j)
      out << format_double(control.time(k)) << ',' << format_double(grid.node(j)) << ','
          << format_double(control.field(j, k)) << '\n';
}

}  // namespace wavelab
