#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "wavelab/errors.hpp"
#include "wavelab/observability.hpp"
#include "wavelab/semilinear.hpp"

using namespace wavelab;

namespace {

const double kPi = std::acos(-1.0);

HUMProblem internal_problem(Eigen::Index n, double horizon) {
  HUMProblem p;
  p.grid = build_grid(0.0, 1.0, n);
  p.field = uniform_coefficient(p.grid);
  const auto [first, last] = node_range(p.grid, 0.3, 0.7);
  p.region = ControlRegion::internal(first, last);
  p.horizon = horizon;
  p.filter_fraction = 0.5;
  return p;
}

State mode1(const Grid1D& g, double amplitude = 1.0) {
  return sample_state(
      g, [&](double x) { return amplitude * std::sin(kPi * x); }, [](double) { return 0.0; });
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST_CASE("effective potential") {
  Eigen::MatrixXd xi(2, 3);
  xi << 0.0, 1e-10, -2.0, 3.5, kPi, 1e3;
  const Eigen::MatrixXd lin = effective_potential(xi, Nonlinearity::linear(2.5));
  CHECK((lin.array() - 2.5).abs().maxCoeff() <= 1e-15);

  const Eigen::MatrixXd zero_xi = Eigen::MatrixXd::Zero(3, 4);
  CHECK((effective_potential(zero_xi, Nonlinearity::sine()).array() - 1.0).abs().maxCoeff() == 0.0);

  const Eigen::MatrixXd pi_xi = Eigen::MatrixXd::Constant(2, 2, kPi);
  CHECK(effective_potential(pi_xi, Nonlinearity::sine()).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::MatrixXd g = effective_potential(xi, Nonlinearity::arctan());
  CHECK(g(0, 2) == doctest::Approx(std::atan(-2.0) / -2.0));
  CHECK(g(0, 0) == 1.0);

  SUBCASE("derivative at zero without an analytic derivative") {
    Nonlinearity e{"exp", [](double s) { return std::exp(s) - 1.0; }, {}, std::nullopt};
    CHECK(e.derivative_at_zero() == doctest::Approx(1.0).epsilon(1e-9));
    const Eigen::MatrixXd small = Eigen::MatrixXd::Constant(1, 1, 1e-12);
    CHECK(effective_potential(small, e)(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("presets satisfy their declared bounds") {
  for (const auto& f : {Nonlinearity::sine(), Nonlinearity::arctan(), Nonlinearity::linear(-3.0),
                        Nonlinearity::linear_arctan(0.5), Nonlinearity::zero()}) {
    REQUIRE(f.lipschitz_bound);
    for (double s = -20.0; s <= 20.0; s += 0.01) CHECK(std::abs(f.f_prime(s)) <= *f.lipschitz_bound + 1e-15);
    // |g| <= Lipschitz bound as well.
    Eigen::MatrixXd xi = Eigen::VectorXd::LinSpaced(401, -20.0, 20.0);
    CHECK(effective_potential(xi, f).cwiseAbs().maxCoeff() <= *f.lipschitz_bound + 1e-15);
  }
  CHECK_FALSE(Nonlinearity::cubic().lipschitz_bound);
  CHECK(nonlinearity_preset("sin").name == "sine");
  CHECK_THROWS_AS(nonlinearity_preset("tanh"), InvalidArgument);
}

TEST_CASE("linearized control reduces to HUM without potential") {
  const HUMProblem p = internal_problem(80, 2.5);
  const State s = mode1(p.grid);
  const HUMSolution hum = solve_hum(p, s);
  const Eigen::MatrixXd V = Eigen::MatrixXd::Zero(p.grid.node_count(), p.steps() + 1);
  const LinearizedControl lin = solve_linearized_control(p, V, 0.0, s);
  CHECK(max_rel(lin.hum.control.field, hum.control.field) <= 1e-10);
  CHECK(lin.verification.terminal_energy_ratio ==
        doctest::Approx(hum.verification.terminal_energy_ratio).epsilon(1e-6));
  CHECK(lin.shift.displacement.cwiseAbs().maxCoeff() == 0.0);
  CHECK((lin.y.col(0) - s.y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("constant potentials stay controllable") {
  const HUMProblem p = internal_problem(80, 2.5);
  const State s = mode1(p.grid);
  for (double c : {-5.0, 5.0}) {
    const Eigen::MatrixXd V = Eigen::MatrixXd::Constant(p.grid.node_count(), 1, c);
    const LinearizedControl lin = solve_linearized_control(p, V, 0.0, s);
    MESSAGE("c = " << c << " ratio " << lin.verification.terminal_energy_ratio);
    CHECK(lin.verification.terminal_energy_ratio <= 1e-3);
    // Trajectory ends at rest.
    CHECK(lin.y.col(lin.y.cols() - 1).cwiseAbs().maxCoeff() <= 1e-2 * s.y.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("constant source is compensated") {
  const HUMProblem p = internal_problem(80, 2.5);
  const State rest = zero_state(p.grid);
  const Eigen::MatrixXd V = Eigen::MatrixXd::Zero(p.grid.node_count(), 1);
  const LinearizedControl lin = solve_linearized_control(p, V, 2.0, rest);
  CHECK(lin.hum.control_norm_sq > 0.0);
  CHECK_FALSE(lin.verification.zero_initial_energy);
  CHECK(lin.verification.terminal_energy_ratio <= 1e-3);
  // Without control the source drives the state away from rest.
  SimulationSetup free;
  free.horizon = p.horizon;
  free.dt = p.time_step();
  free.reaction.source = -2.0;
  const Trajectory drift = simulate(p.grid, p.field, rest, free);
  CHECK(energy(p.grid, p.field, drift.end) > 1e3 * lin.verification.terminal_energy);
}

TEST_CASE("fixed point for linear and zero nonlinearities") {
  const HUMProblem p = internal_problem(80, 2.5);
  const State s = mode1(p.grid, 0.5);

  const FixedPointReport zero = fixed_point_control(p, Nonlinearity::zero(), s);
  CHECK(zero.converged);
  CHECK(zero.iterations == 1);
  const HUMSolution hum = solve_hum(p, s);
  CHECK(max_rel(zero.control.field, hum.control.field) <= 1e-10);
  CHECK(zero.terminal_ratio == doctest::Approx(hum.verification.terminal_energy_ratio).epsilon(1e-6));

  const FixedPointReport lin = fixed_point_control(p, Nonlinearity::linear(3.0), s);
  CHECK(lin.converged);
  CHECK(lin.iterations == 1);
  CHECK(lin.diffs.back() == 0.0);
  CHECK(lin.terminal_ratio <= 1e-3);
}

TEST_CASE("fixed point for the sine nonlinearity") {
  const HUMProblem p = internal_problem(100, 2.5);
  const State s = mode1(p.grid, 0.5);
  const FixedPointReport r = fixed_point_control(p, Nonlinearity::sine(), s);
  MESSAGE("iterations " << r.iterations << " last diff " << r.diffs.back() << " ratio "
                        << r.terminal_ratio);
  CHECK(r.converged);
  CHECK(r.iterations <= 20);
  CHECK(r.diffs.back() <= 1e-6);
  CHECK(r.terminal_ratio <= 1e-2);
  for (double sup : r.potential_sup) CHECK(sup <= 1.0);
  CHECK(r.control_norms.size() == static_cast<std::size_t>(r.iterations));

  // The reported ratio comes from a replay with f in the stepper.
  SimulationSetup rs = controlled_setup(p, r.control, Direction::forward);
  rs.reaction.nonlinearity = [](double y) { return std::sin(y); };
  const Trajectory replay = simulate(p.grid, p.field, s, rs);
  CHECK((replay.end.y - r.verification.replay.end.y).cwiseAbs().maxCoeff() == 0.0);

  const nlohmann::json j = r.to_json();
  CHECK(j["iterations"] == r.iterations);
  CHECK(j["diffs"].size() == r.diffs.size());
  CHECK(j.contains("terminal_ratio"));
}

TEST_CASE("cubic nonlinearity: small data converge, large data may fail") {
  const HUMProblem p = internal_problem(60, 2.5);
  const FixedPointReport small = fixed_point_control(p, Nonlinearity::cubic(), mode1(p.grid, 1e-2));
  CHECK(small.converged);
  CHECK(small.terminal_ratio <= 1e-2);

  FixedPointOptions opt;
  opt.max_iter = 6;
  const FixedPointReport large =
      fixed_point_control(p, Nonlinearity::cubic(), mode1(p.grid, 1e2), std::nullopt, opt);
  if (!large.converged) CHECK_FALSE(large.message.empty());
  CHECK(large.diffs.size() >= 1);
}

TEST_CASE("fixed point options are validated") {
  const HUMProblem p = internal_problem(40, 2.5);
  FixedPointOptions opt;
  opt.relaxation = 0.0;
  CHECK_THROWS_AS(fixed_point_control(p, Nonlinearity::sine(), mode1(p.grid), std::nullopt, opt),
                  InvalidArgument);
  opt = {};
  opt.tol = 0.0;
  CHECK_THROWS_AS(fixed_point_control(p, Nonlinearity::sine(), mode1(p.grid), std::nullopt, opt),
                  InvalidArgument);
}

TEST_CASE("space-time norm") {
  const Grid1D g = build_grid(0.0, 1.0, 10);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(g.node_count(), 5);
  CHECK(space_time_norm(g, 0.1, ones) == doctest::Approx(std::sqrt(0.1 * 0.1 * 11 * 5)));
}
