#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "wavelab/dynamics.hpp"
#include "wavelab/errors.hpp"

using namespace wavelab;

namespace {

const double kPi = std::acos(-1.0);

struct Setup1 {
  Grid1D grid;
  CoefficientField field;
};

Setup1 unit(Eigen::Index n, double a = 1.0) {
  Grid1D g = build_grid(0.0, 1.0, n);
  return {g, uniform_coefficient(g, a)};
}

State mode1(const Grid1D& g) {
  return sample_state(g, [](double x) { return std::sin(kPi * x); }, [](double) { return 0.0; });
}

SimulationSetup free_setup(double horizon, double dt) {
  SimulationSetup s;
  s.horizon = horizon;
  s.dt = dt;
  return s;
}

}  // namespace

TEST_CASE("standing wave returns after one period") {
  auto [g, f] = unit(200);
  const double dt = stable_dt(g, f, 2.0, 0.9);
  const Trajectory t = simulate(g, f, mode1(g), free_setup(2.0, dt));
  double err = 0.0;
  for (Eigen::Index j = 0; j < g.node_count(); ++j)
    err = std::max(err, std::abs(t.end.y(j) - std::sin(kPi * g.node(j))));
  CHECK(err <= 1e-3);
}

TEST_CASE("zero data stays zero") {
  auto [g, f] = unit(20);
  const Trajectory t = simulate(g, f, zero_state(g), free_setup(1.0, 0.025));
  CHECK(t.displacement.cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.energy.maxCoeff() == 0.0);
}

TEST_CASE("discrete mode oracle") {
  // For a = 1 the leapfrog solution of an eigenvector is exactly
  // cos(n w dt) phi_k with cos(w dt) = 1 - dt^2 lambda_k / 2.
  auto [g, f] = unit(50);
  const double dt = 0.01;
  const double lam = uniform_discrete_eigenvalue(g, 2);
  const double w = std::acos(1.0 - 0.5 * dt * dt * lam) / dt;
  const State s0 = sample_state(g, [](double x) { return std::sin(2 * kPi * x); },
                                [](double) { return 0.0; });
  const Trajectory t = simulate(g, f, s0, free_setup(1.0, dt));
  // The Taylor start gives y^1 = (1 - dt^2 lam / 2) y^0 = cos(w dt) y^0.
  for (Eigen::Index n : {1, 37, 100}) {
    const Eigen::VectorXd expect = std::cos(w * n * dt) * s0.y;
    CHECK((t.displacement.col(n) - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("energy of sin(pi x)") {
  auto [g, f] = unit(400);
  const double e = energy(g, f, mode1(g));
  CHECK(e == doctest::Approx(kPi * kPi / 4).epsilon(1e-4));
  State s = mode1(g);
  s.v = s.y;
  State d{2.0 * s.y, 2.0 * s.v, 0.0};
  CHECK(energy(g, f, d) == doctest::Approx(4.0 * energy(g, f, s)).epsilon(1e-14));
}

TEST_CASE("staggered energy is conserved and the scheme is reversible") {
  Grid1D g = build_grid(0.0, 1.0, 100);
  const CoefficientField f = sample_coefficient(g, [](double x) { return 1.0 + x; });
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  State s0 = zero_state(g);
  for (Eigen::Index j = 1; j < g.n_cells; ++j) {
    s0.y(j) = u(rng);
    s0.v(j) = u(rng);
  }
  const double dt = stable_dt(g, f, 100.0);
  const Trajectory fw = simulate(g, f, s0, free_setup(100.0, dt));
  const double e = fw.energy_staggered_before;
  CHECK((fw.energy_staggered.array() - e).abs().maxCoeff() / e <= 1e-12);

  SimulationSetup back = free_setup(100.0, dt);
  back.direction = Direction::backward;
  State terminal = fw.end;
  const Trajectory bw = simulate(g, f, terminal, back);
  const double scale = s0.y.cwiseAbs().maxCoeff() + s0.v.cwiseAbs().maxCoeff();
  CHECK((bw.start.y - s0.y).cwiseAbs().maxCoeff() / scale <= 1e-10);
  CHECK((bw.start.v - s0.v).cwiseAbs().maxCoeff() / scale <= 1e-10);
  CHECK(bw.time(0) == doctest::Approx(0.0));
}

TEST_CASE("boundary flux of the standing wave") {
  auto [g, f] = unit(200);
  const double dt = stable_dt(g, f, 2.0);
  const Trajectory t = simulate(g, f, mode1(g), free_setup(2.0, dt));
  const Eigen::VectorXd r = boundary_flux(t, Side::right);
  const Eigen::VectorXd l = boundary_flux(t, Side::left);
  double err = 0.0;
  for (Eigen::Index n = 0; n <= t.steps; ++n) {
    const double ex = -kPi * std::cos(kPi * t.time(n));
    err = std::max({err, std::abs(r(n) - ex), std::abs(l(n) - ex)});
  }
  CHECK(err <= 1e-3);
}

TEST_CASE("boundary flux requires a Dirichlet side") {
  auto [g, f] = unit(20);
  SimulationSetup s = free_setup(1.0, 0.025);
  s.bc.right = Dissipative{};
  const Trajectory t = simulate(g, f, mode1(g), s);
  CHECK_THROWS_AS(boundary_flux(t, Side::right), InvalidArgument);
}

TEST_CASE("CFL and divisibility are enforced") {
  auto [g, f] = unit(20);
  CHECK_THROWS_AS(simulate(g, f, mode1(g), free_setup(1.0, 0.1)), CflError);
  CHECK_THROWS_AS(simulate(g, f, mode1(g), free_setup(1.0, 0.03)), InvalidArgument);
  SimulationSetup s = free_setup(1.0, 0.025);
  s.cfl_limit = 1.5;
  CHECK_THROWS_AS(simulate(g, f, mode1(g), s), InvalidArgument);
  s.cfl_limit = 1.0;
  s.bc.right = DirichletData{Eigen::VectorXd::Zero(10)};
  CHECK_THROWS_AS(simulate(g, f, mode1(g), s), InvalidArgument);
  SimulationSetup d = free_setup(1.0, 0.025);
  d.damping = InternalDampingSpec::uniform(g, DampingLaw::linear());
  d.direction = Direction::backward;
  CHECK_THROWS_AS(simulate(g, f, mode1(g), d), InvalidArgument);
}

TEST_CASE("dissipation balance") {
  auto [g, f] = unit(100);
  SUBCASE("conservation") {
    const Trajectory t = simulate(g, f, mode1(g), free_setup(10.0, 0.008));
    const BalanceReport r = dissipation_balance(t);
    CHECK(r.degenerate);
    CHECK(r.max_relative() <= 1e-10);
  }
  SUBCASE("staggered balance is exact for nonlinear laws") {
    for (const DampingLaw& law : {DampingLaw::linear(), DampingLaw::power(3.0),
                                  DampingLaw::power(0.5), DampingLaw::saturating()}) {
      SimulationSetup s = free_setup(5.0, 0.005);
      s.damping = InternalDampingSpec::uniform(g, law);
      s.bc.right = Dissipative{1.0, 0.5, law};
      const Trajectory t = simulate(g, f, mode1(g), s);
      CHECK(dissipation_balance(t).max_relative() <= 1e-10);
      for (Eigen::Index n = 0; n < t.steps; ++n)
        CHECK(t.energy_staggered(n + 1) <= t.energy_staggered(n) + 1e-10 * t.energy(0));
    }
  }
  SUBCASE("collocated residual is second order") {
    for (int variant = 0; variant < 2; ++variant) {
      double prev = 0.0;
      for (double dt : {0.008, 0.004}) {
        SimulationSetup s = free_setup(4.0, dt);
        if (variant == 0)
          s.damping = InternalDampingSpec::uniform(g, DampingLaw::linear());
        else
          s.bc.right = Dissipative{1.0, 0.0, DampingLaw::linear()};
        const Trajectory t = simulate(g, f, mode1(g), s);
        const double r = dissipation_balance(t, BalanceKind::collocated).max_relative();
        if (prev > 0.0) CHECK(prev / r >= 3.5);
        prev = r;
      }
    }
  }
}

TEST_CASE("transparent boundary extinguishes the energy") {
  auto [g, f] = unit(200);
  SimulationSetup s = free_setup(3.0, g.h);
  s.bc.right = Dissipative{1.0, 0.0, DampingLaw::linear()};
  const Trajectory t = simulate(g, f, mode1(g), s);
  for (Eigen::Index n = 0; n <= t.steps; ++n)
    if (t.time(n) >= 2.1) CHECK(t.energy(n) / t.energy(0) <= 1e-3);
}

TEST_CASE("full domain control reaches rest") {
  auto [g, f] = unit(200);
  const State s0 = mode1(g);
  const FullDomainControl c = full_domain_control(g, f, s0, 1.0);
  CHECK(energy(g, f, c.trajectory.end) / energy(g, f, s0) <= 1e-20);

  const State s1 = sample_state(g, [](double x) { return std::sin(2 * kPi * x); },
                                [](double x) { return std::sin(kPi * x); });
  const FullDomainControl c1 = full_domain_control(g, f, s1, 0.5);
  CHECK(energy(g, f, c1.trajectory.end) / energy(g, f, s1) <= 1e-4);

  const FullDomainControl z = full_domain_control(g, f, zero_state(g), 1.0);
  CHECK(z.forcing.field.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multiplier and equipartition identities converge") {
  double prev_m = 0.0, prev_e = 0.0;
  for (Eigen::Index n : {100, 200, 400}) {
    auto [g, f] = unit(n);
    const Trajectory t = simulate(g, f, mode1(g), free_setup(2.0, 2.0 / (2 * n)));
    const double m = multiplier_identity_residual(t, g.nodes());
    const double e = equipartition_residual(t);
    if (n == 400) {
      CHECK(m <= 1e-3);
      CHECK(e <= 1e-3);
    }
    if (prev_m > 0.0) {
      CHECK(std::log2(prev_m / m) >= 1.8);
      CHECK(std::log2(prev_e / e) >= 1.8);
    }
    prev_m = m;
    prev_e = e;
  }
  auto [g, f] = unit(50);
  const Trajectory z = simulate(g, f, zero_state(g), free_setup(1.0, 0.01));
  CHECK(multiplier_identity_residual(z, g.nodes()) == 0.0);
  CHECK(equipartition_residual(z) == 0.0);
  const Trajectory t = simulate(g, f, mode1(g), free_setup(1.0, 0.01));
  CHECK(multiplier_identity_residual(t, Eigen::VectorXd::Zero(g.node_count())) == 0.0);
}

TEST_CASE("equipartition on a short horizon") {
  auto [g, f] = unit(400);
  const Trajectory t = simulate(g, f, mode1(g), free_setup(0.25, 0.25 / 125));
  const IdentityResidual r = equipartition(t);
  // int phi' phi dx = -(pi/4) sin(2 pi t), so both sides equal -pi/4.
  const double exact = -0.25 * kPi;
  CHECK(r.lhs == doctest::Approx(exact).epsilon(1e-3));
  CHECK(r.relative <= 1e-3);
}

TEST_CASE("finite propagation speed") {
  auto [g, f] = unit(400);
  const State s0 = sample_state(
      g,
      [](double x) {
        if (x <= 0.4 || x >= 0.6) return 0.0;
        const double s = std::sin(kPi * (x - 0.4) / 0.2);
        return s * s * s * s;
      },
      [](double) { return 0.0; });
  const double horizon = 0.2;
  const Trajectory t = simulate(g, f, s0, free_setup(horizon, stable_dt(g, f, horizon)));
  const double delta = 5 * g.h;
  for (Eigen::Index n = 0; n <= t.steps; ++n) {
    const double tn = t.time(n);
    for (Eigen::Index j = 0; j < g.node_count(); ++j) {
      const double x = g.node(j);
      if (x < 0.4 - tn - delta || x > 0.6 + tn + delta)
        CHECK(std::abs(t.displacement(j, n)) <= 1e-8);
    }
  }
}

TEST_CASE("superposition for linear damping") {
  auto [g, f] = unit(40);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  auto random_state = [&] {
    State s = zero_state(g);
    for (Eigen::Index j = 1; j < g.n_cells; ++j) {
      s.y(j) = u(rng);
      s.v(j) = u(rng);
    }
    return s;
  };
  const double dt = 0.02;
  const Eigen::Index steps = 50;
  auto forcing = [&] {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g.node_count(), steps + 1);
    for (Eigen::Index j = 10; j <= 20; ++j)
      for (Eigen::Index n = 0; n <= steps; ++n) m(j, n) = u(rng);
    return m;
  };
  auto signal = [&] {
    Eigen::VectorXd s(steps + 1);
    for (Eigen::Index n = 0; n <= steps; ++n) s(n) = u(rng);
    return s;
  };
  for (int trial = 0; trial < 3; ++trial) {
    const State a = random_state(), b = random_state();
    const Eigen::MatrixXd fa = forcing(), fb = forcing();
    const Eigen::VectorXd sa = signal(), sb = signal();
    auto run = [&](const State& s, const Eigen::MatrixXd& fm, const Eigen::VectorXd& sig) {
      SimulationSetup st = free_setup(1.0, dt);
      st.forcing = ForcingSpec::internal(fm, 10, 20);
      st.bc.left = DirichletData{sig};
      st.bc.right = Dissipative{0.7, 0.0, DampingLaw::linear()};
      st.damping = InternalDampingSpec::uniform(g, DampingLaw::linear(0.3));
      return simulate(g, f, s, st).end;
    };
    const State ea = run(a, fa, sa), eb = run(b, fb, sb);
    const State sum{a.y + 2 * b.y, a.v + 2 * b.v, 0.0};
    const State es = run(sum, fa + 2 * fb, sa + 2 * sb);
    CHECK((es.y - ea.y - 2 * eb.y).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
