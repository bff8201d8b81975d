#include "wavelab/semilinear.hpp"

#include <algorithm>
#include <cmath>

#include "wavelab/errors.hpp"

namespace wavelab {

double Nonlinearity::derivative_at_zero() const {
  if (f_prime) return f_prime(0.0);
  const double d = 1e-6;
  return (f(d) - f(-d)) / (2.0 * d);
}

Nonlinearity Nonlinearity::zero() {
  return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, 0.0};
}

Nonlinearity Nonlinearity::linear(double alpha) {
  return {"linear", [alpha](double s) { return alpha * s; }, [alpha](double) { return alpha; },
          std::abs(alpha)};
}

Nonlinearity Nonlinearity::sine() {
  return {"sine", [](double s) { return std::sin(s); }, [](double s) { return std::cos(s); }, 1.0};
}

Nonlinearity Nonlinearity::arctan() {
  return {"arctan", [](double s) { return std::atan(s); },
          [](double s) { return 1.0 / (1.0 + s * s); }, 1.0};
}

Nonlinearity Nonlinearity::cubic() {
  return {"cubic", [](double s) { return s * s * s; }, [](double s) { return 3.0 * s * s; },
          std::nullopt};
}

Nonlinearity Nonlinearity::linear_arctan(double alpha) {
  return {"linear_arctan", [alpha](double s) { return alpha * s + std::atan(s); },
          [alpha](double s) { return alpha + 1.0 / (1.0 + s * s); }, std::abs(alpha) + 1.0};
}

Nonlinearity nonlinearity_preset(const std::string& name, double alpha) {
  if (name == "zero") return Nonlinearity::zero();
  if (name == "linear") return Nonlinearity::linear(alpha);
  if (name == "sine" || name == "sin") return Nonlinearity::sine();
  if (name == "arctan") return Nonlinearity::arctan();
  if (name == "cubic") return Nonlinearity::cubic();
  if (name == "linear_arctan") return Nonlinearity::linear_arctan(alpha);
  throw InvalidArgument("unknown nonlinearity: " + name);
}

Eigen::MatrixXd effective_potential(const Eigen::MatrixXd& xi, const Nonlinearity& f) {
  const double f0 = f.at_zero();
  const double g0 = f.derivative_at_zero();
  return xi.unaryExpr([&](double s) {
    return std::abs(s) < kRemovableThreshold ? g0 : (f.f(s) - f0) / s;
  });
}

double space_time_norm(const Grid1D& grid, double dt, const Eigen::MatrixXd& field) {
  return std::sqrt(dt * grid.h * field.squaredNorm());
}

namespace {

// Energy of a - b; end velocities are boundary data, not degrees of freedom.
double difference_energy(const HUMProblem& p, const State& a, const State& b) {
  State d{a.y - b.y, a.v - b.v, a.t};
  d.v(0) = d.v(d.v.size() - 1) = 0.0;
  return energy(p.grid, p.field, d);
}

void finish_record(VerificationRecord& rec) {
  rec.zero_initial_energy = rec.initial_energy == 0.0;
  if (rec.zero_initial_energy)
    rec.terminal_energy_ratio = rec.terminal_energy == 0.0 ? 0.0 : HUGE_VAL;
  else
    rec.terminal_energy_ratio = rec.terminal_energy / rec.initial_energy;
}

State terminal_target(const HUMProblem& p, const std::optional<State>& target) {
  if (target) return State{target->y, target->v, p.horizon};
  return zero_state(p.grid, p.horizon);
}

}  // namespace

LinearizedControl solve_linearized_control(const HUMProblem& problem,
                                           const Eigen::MatrixXd& potential, double f0,
                                           const State& initial,
                                           const std::optional<State>& target) {
  HUMProblem p = problem;
  p.potential = potential;
  p.validate();
  if (!std::isfinite(f0)) throw InvalidArgument("f(0) must be finite");
  const double dt = p.time_step();
  const State zT = terminal_target(p, target);

  LinearizedControl out;
  SimulationSetup zs;
  zs.horizon = p.horizon;
  zs.dt = dt;
  zs.direction = Direction::backward;
  zs.reaction.potential = p.potential;
  zs.reaction.source = -f0;
  zs.record_stride = 1;
  out.shift = simulate(p.grid, p.field, zT, zs);

  const State shifted{initial.y - out.shift.start.y, initial.v - out.shift.start.v, 0.0};
  out.hum = solve_hum_shifted(p, shifted);

  SimulationSetup ps = controlled_setup(p, out.hum.control, Direction::forward);
  ps.record_stride = 1;
  const Trajectory pt = simulate(p.grid, p.field, shifted, ps);
  out.y = pt.displacement + out.shift.displacement;

  VerificationRecord& rec = out.verification;
  SimulationSetup rs = controlled_setup(p, out.hum.control, Direction::forward);
  rs.reaction.source = -f0;
  rec.replay = simulate(p.grid, p.field, State{initial.y, initial.v, 0.0}, rs);
  rec.initial_energy = difference_energy(p, State{initial.y, initial.v, 0.0}, out.shift.start);
  rec.terminal_energy = difference_energy(p, rec.replay.end, zT);
  rec.control_norm_sq = out.hum.control.norm_sq(p.grid);
  finish_record(rec);
  out.hum.verification = rec;
  return out;
}

FixedPointReport fixed_point_control(const HUMProblem& problem, const Nonlinearity& f,
                                     const State& initial, const std::optional<State>& target,
                                     const FixedPointOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0)) throw InvalidArgument("fixed-point tolerance must be positive");
  if (!(options.relaxation > 0.0 && options.relaxation <= 1.0))
    throw InvalidArgument("relaxation must lie in (0, 1]");
  if (options.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");

  const double dt = problem.time_step();
  const Eigen::Index levels = problem.steps() + 1;
  const double f0 = f.at_zero();
  FixedPointReport report;
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(problem.grid.node_count(), levels);
  Eigen::MatrixXd V = effective_potential(xi, f);
  State z0 = zero_state(problem.grid);

  try {
    for (int k = 1; k <= options.max_iter; ++k) {
      report.potential_sup.push_back(V.cwiseAbs().maxCoeff());
      const LinearizedControl lin = solve_linearized_control(problem, V, f0, initial, target);
      report.control = lin.hum.control;
      report.control_norms.push_back(std::sqrt(lin.hum.control_norm_sq));
      z0 = lin.shift.start;
      const Eigen::MatrixXd next = (1.0 - options.relaxation) * xi + options.relaxation * lin.y;
      const double diff = space_time_norm(problem.grid, dt, next - xi);
      report.diffs.push_back(diff);
      report.iterations = k;
      if (!std::isfinite(diff)) throw NumericalError("fixed-point iterate is not finite");
      xi = next;
      Eigen::MatrixXd V_next = effective_potential(xi, f);
      if (diff <= options.tol) {
        report.converged = true;
        break;
      }
      // Same potential up to roundoff, same linear problem: xi is already a fixed point.
      const double scale = std::max(1.0, V.cwiseAbs().maxCoeff());
      if (options.relaxation == 1.0 && (V_next - V).cwiseAbs().maxCoeff() <= 8e-16 * scale) {
        report.diffs.push_back(0.0);
        report.converged = true;
        break;
      }
      V = std::move(V_next);
    }
    if (!report.converged)
      report.message = "no convergence within " + std::to_string(options.max_iter) + " iterations";
  } catch (const NumericalError& e) {
    report.converged = false;
    report.message = e.what();
  }
  if (report.iterations == 0) return report;

  // Replay with f evaluated in the stepper.
  VerificationRecord& rec = report.verification;
  HUMProblem plain = problem;
  plain.potential.resize(0, 0);
  SimulationSetup rs = controlled_setup(plain, report.control, Direction::forward);
  rs.reaction.nonlinearity = f.f;
  const State start{initial.y, initial.v, 0.0};
  rec.initial_energy = difference_energy(problem, start, z0);
  rec.control_norm_sq = report.control.norm_sq(problem.grid);
  try {
    rec.replay = simulate(problem.grid, problem.field, start, rs);
    rec.terminal_energy = difference_energy(problem, rec.replay.end, terminal_target(problem, target));
    finish_record(rec);
  } catch (const NumericalError& e) {
    rec.terminal_energy = HUGE_VAL;
    rec.terminal_energy_ratio = HUGE_VAL;
    report.converged = false;
    if (report.message.empty()) report.message = std::string("replay failed: ") + e.what();
  }
  report.terminal_ratio = rec.terminal_energy_ratio;
  return report;
}

nlohmann::json FixedPointReport::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["diffs"] = diffs;
  j["control_norms"] = control_norms;
  j["potential_sup"] = potential_sup;
  j["converged"] = converged;
  if (!message.empty()) j["message"] = message;
  j["terminal_ratio"] = std::isfinite(terminal_ratio) ? nlohmann::json(terminal_ratio)
                                                      : nlohmann::json(nullptr);
  j["verification"] = verification.to_json();
  return j;
}

}  // namespace wavelab
