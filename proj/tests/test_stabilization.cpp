#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "wavelab/errors.hpp"
#include "wavelab/stabilization.hpp"

using namespace wavelab;

namespace {

const double kPi = std::acos(-1.0);

Eigen::VectorXd sampled(const Eigen::VectorXd& t, double (*f)(double)) {
  return t.unaryExpr(f);
}

DecayExperimentConfig internal_config(Eigen::Index n, const DampingLaw& law, double horizon,
                                      std::uint64_t seed = 7) {
  DecayExperimentConfig c;
  c.grid = build_grid(0.0, 1.0, n);
  c.field = uniform_coefficient(c.grid);
  c.placement = DampingPlacement::internal_uniform(c.grid);
  c.law = law;
  c.initial = broadband_state(c.grid, c.field, 10, seed);
  c.horizon = horizon;
  return c;
}

}  // namespace

TEST_CASE("decay fits recover synthetic rates") {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(1001, 0.0, 10.0);
  const DecayFit e = fit_decay_rate(t, sampled(t, [](double s) { return 3.0 * std::exp(-0.7 * s); }),
                                    DecayModel::exponential, {1.0, 10.0});
  CHECK(e.rate == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(e.prefactor == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(e.r_squared == doctest::Approx(1.0));
  CHECK(e.samples == 901);

  const Eigen::VectorXd tp = Eigen::VectorXd::LinSpaced(2000, 0.5, 100.0);
  const DecayFit p = fit_decay_rate(tp, sampled(tp, [](double s) { return 5.0 / (s * s); }),
                                    DecayModel::polynomial, {1.0, 100.0});
  CHECK(p.exponent == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(p.prefactor == doctest::Approx(5.0).epsilon(1e-10));

  const Eigen::VectorXd tw = Eigen::VectorXd::LinSpaced(5001, 0.0, 50.0);
  const DecayFit w = fit_decay_rate(
      tw, sampled(tw, [](double s) { return std::exp(-s) * (2.0 + std::cos(10.0 * s)); }),
      DecayModel::exponential, {10.0, 50.0});
  CHECK(std::abs(w.rate - 1.0) <= 0.05);
  CHECK(w.r_squared < 1.0);

  SUBCASE("invalid windows") {
    CHECK_THROWS_AS(fit_decay_rate(t, t, DecayModel::exponential, {5.0, 5.0}), InvalidArgument);
    CHECK_THROWS_AS(fit_decay_rate(tp, tp, DecayModel::polynomial, {0.0, 100.0}), InvalidArgument);
    CHECK_THROWS_AS(fit_decay_rate(tp, tp, DecayModel::polynomial, {20.0, 100.0}), InvalidArgument);
    CHECK_THROWS_AS(fit_decay_rate(t, t, DecayModel::exponential, {1.0, 1.05}), InvalidArgument);
  }
  SUBCASE("zero energy marks extinction") {
    Eigen::VectorXd z = sampled(t, [](double s) { return std::exp(-s); });
    z.tail(100).setZero();
    const DecayFit x = fit_decay_rate(t, z, DecayModel::exponential, {1.0, 10.0});
    CHECK(x.extinct);
    CHECK(std::isinf(x.rate));
  }
}

TEST_CASE("predicted rates and explicit constants") {
  const Grid1D g = build_grid(0.0, 1.0, 200);
  const CoefficientField a = uniform_coefficient(g);
  const DampingPlacement internal = DampingPlacement::internal_uniform(g);
  const DecayConstants c = decay_constants(g, a, DampingLaw::linear(), internal);
  CHECK(c.lambda1 == doctest::Approx(kPi * kPi).epsilon(1e-4));
  CHECK(c.a0 == 1.0);
  CHECK(c.a1 == 1.0);

  const DecayPrediction lin = predicted_decay(DampingLaw::linear(), internal, c);
  CHECK(lin.kind == DecayPrediction::Kind::exponential);
  REQUIRE(lin.explicit_bound());
  CHECK(*lin.epsilon0 == doctest::Approx(std::sqrt(c.lambda1) / 2.0));
  CHECK(*lin.epsilon0 == doctest::Approx(kPi / 2.0).epsilon(1e-4));
  CHECK(*lin.epsilon1 == doctest::Approx(c.lambda1 / (2.0 * c.lambda1 + 1.0)));
  CHECK(*lin.epsilon1 == doctest::Approx(0.47589).epsilon(1e-3));
  CHECK(*lin.bound_rate == doctest::Approx(0.99 * *lin.epsilon1 / 2.0));
  CHECK(*lin.bound_rate == doctest::Approx(0.23557).epsilon(1e-3));
  CHECK(lin.prefactor == 4.0);

  const DecayPrediction cubic = predicted_decay(DampingLaw::power(3.0), internal, c);
  CHECK(cubic.kind == DecayPrediction::Kind::polynomial);
  CHECK(*cubic.exponent == doctest::Approx(-1.0));
  CHECK_FALSE(cubic.explicit_bound());

  const DecayPrediction root = predicted_decay(DampingLaw::power(0.5), internal, c);
  CHECK(*root.exponent == doctest::Approx(-2.0));

  const DecayPrediction sat = predicted_decay(DampingLaw::saturating(), internal, c);
  CHECK(sat.kind == DecayPrediction::Kind::exponential);

  const DampingLaw table = DampingLaw::table((Eigen::VectorXd(3) << -1, 0, 1).finished(),
                                            (Eigen::VectorXd(3) << -2, 0, 2).finished());
  CHECK(predicted_decay(table, internal, c).kind == DecayPrediction::Kind::unavailable);

  const DampingPlacement boundary = DampingPlacement::boundary(Side::right, 1.0);
  const DecayPrediction bl =
      predicted_decay(DampingLaw::linear(), boundary, decay_constants(g, a, DampingLaw::linear(), boundary));
  CHECK(bl.kind == DecayPrediction::Kind::exponential);
  CHECK_FALSE(bl.explicit_bound());
}

TEST_CASE("placements") {
  const Grid1D g = build_grid(0.0, 1.0, 20);
  CHECK(DampingPlacement::boundary_from_observer(g, Side::right, 0.25).alpha == doctest::Approx(0.75));
  CHECK(DampingPlacement::boundary_from_observer(g, Side::left, 0.25).alpha == doctest::Approx(0.25));
  CHECK_THROWS_AS(DampingPlacement::boundary(Side::right, 0.0).validate(g), InvalidArgument);
  CHECK_THROWS_AS(DampingPlacement::internal(Eigen::VectorXd::Zero(21)).validate(g), InvalidArgument);
  CHECK_THROWS_AS(DampingPlacement::internal(Eigen::VectorXd::Ones(5)).validate(g), InvalidArgument);
  const SimulationSetup s = DampingPlacement::boundary(Side::left, 2.0, 0.5).setup(g, DampingLaw::linear());
  REQUIRE(std::holds_alternative<Dissipative>(s.bc.left));
  CHECK(std::get<Dissipative>(s.bc.left).alpha == 2.0);
  CHECK(std::holds_alternative<DirichletZero>(s.bc.right));
  CHECK_FALSE(s.damping.enabled);
}

TEST_CASE("law presets") {
  CHECK(damping_law_preset("linear").linear_gain);
  CHECK(damping_law_preset("power3").exponents->p == 3.0);
  CHECK(damping_law_preset("power0.5").exponents->lambda == 0.5);
  CHECK(damping_law_preset("saturating")(1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(damping_law_preset("power"), InvalidArgument);
  CHECK_THROWS_AS(damping_law_preset("power-1"), InvalidArgument);
  CHECK_THROWS_AS(damping_law_preset("quadratic"), InvalidArgument);
}

TEST_CASE("linear internal damping decays at rate one") {
  const DecayReport r = run_decay_experiment(internal_config(200, DampingLaw::linear(), 50.0));
  MESSAGE("gamma " << r.fit.rate << " R2 " << r.fit.r_squared << " violations " << r.bound_violations);
  CHECK(r.energy_nonincreasing);
  CHECK(r.max_energy_increase <= 1e-10);
  CHECK(std::abs(r.fit.rate - 1.0) <= 0.05);
  REQUIRE(r.bound_satisfied);
  CHECK(*r.bound_satisfied);
  CHECK(r.final_ratio < 1e-15);

  const nlohmann::json j = r.to_json();
  CHECK(j["verdicts"]["bound_satisfied"] == true);
  CHECK(j["fit"]["model"] == "exponential");
}

TEST_CASE("polynomial decay for power laws") {
  SUBCASE("cubic") {
    DecayExperimentConfig c = internal_config(100, DampingLaw::power(3.0), 100.0);
    c.window = FitWindow{10.0, 100.0};
    const DecayReport r = run_decay_experiment(c);
    MESSAGE("slope " << r.fit.exponent << " R2 " << r.fit.r_squared);
    CHECK(r.energy_nonincreasing);
    CHECK(r.fit.model == DecayModel::polynomial);
    CHECK(std::abs(r.fit.exponent + 1.0) <= 0.2);
    REQUIRE(r.exponent_within_tol);
    CHECK(*r.exponent_within_tol);
  }
  SUBCASE("square root") {
    // E(0) = 9: the late-time regime starts within the horizon.
    DecayExperimentConfig c = internal_config(100, DampingLaw::power(0.5), 200.0);
    c.initial.y *= 3.0;
    c.initial.v *= 3.0;
    c.window = FitWindow{20.0, 200.0};
    const DecayReport r = run_decay_experiment(c);
    MESSAGE("slope " << r.fit.exponent << " R2 " << r.fit.r_squared);
    CHECK(r.energy_nonincreasing);
    CHECK_FALSE(r.fit.extinct);
    CHECK(std::abs(r.fit.exponent + 2.0) <= 0.4);
  }
}

TEST_CASE("saturating damping still drives the energy down") {
  const DecayReport r = run_decay_experiment(internal_config(100, DampingLaw::saturating(), 200.0));
  MESSAGE("E(200)/E(0) = " << r.final_ratio);
  CHECK(r.energy_nonincreasing);
  CHECK(r.final_ratio <= 1e-2);
}

TEST_CASE("boundary damping and the reflection rate") {
  CHECK(reflection_decay_rate(0.2) == doctest::Approx(std::log(1.5)));
  CHECK(reflection_decay_rate(5.0) == doctest::Approx(std::log(1.5)));
  CHECK(std::isinf(reflection_decay_rate(1.0)));
  CHECK_THROWS_AS(reflection_decay_rate(0.0), InvalidArgument);

  const Grid1D g = build_grid(0.0, 1.0, 200);
  const OverdampingSweep s = overdamping_sweep(g, {0.2, 1.0, 5.0, 25.0}, 20.0, 3);
  for (const auto& p : s.points)
    MESSAGE("kappa " << p.kappa << " fitted " << p.fitted << " theory " << p.theory);
  CHECK(s.peak_at_transparent);
  CHECK(s.non_monotone);
  CHECK(s.points[1].extinct);
  CHECK(s.points[0].fitted == doctest::Approx(s.points[0].theory).epsilon(0.05));
  CHECK(s.points[2].fitted == doctest::Approx(s.points[2].theory).epsilon(0.05));
  CHECK(s.points[3].fitted == doctest::Approx(s.points[3].theory).epsilon(0.05));
  CHECK(s.to_json()["points"].size() == 4);
}

TEST_CASE("Russell constant gives a consistent rate") {
  const RussellRate unit = russell_rate_bound(2.0, 1.0);
  CHECK(unit.gamma == doctest::Approx(std::log(2.0) / 2.0));
  CHECK(unit.prefactor == 2.0);
  CHECK_THROWS_AS(russell_rate_bound(2.0, 0.0), InvalidArgument);

  const Grid1D g = build_grid(0.0, 1.0, 200);
  const CoefficientField a = uniform_coefficient(g);
  const DampingPlacement place = DampingPlacement::boundary(Side::right, 0.2);
  const RussellMeasurement m = measure_russell_constant(g, a, place, 4.0, 8, 11);
  const double r = 0.8 / 1.2;
  const double c0_theory = std::pow(r, 4) / (1.0 - std::pow(r, 4));
  MESSAGE("C0 " << m.c0 << " theory " << c0_theory);
  CHECK(m.ratios.size() == 8);
  std::vector<double> sorted = m.ratios;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted[4] == doctest::Approx(c0_theory).epsilon(0.02));
  CHECK(m.c0 >= 0.99 * c0_theory);
  const RussellRate pred = russell_rate_bound(4.0, m.c0);
  CHECK(pred.gamma <= reflection_decay_rate(0.2) * 1.01);
  CHECK(pred.gamma >= 0.9 * reflection_decay_rate(0.2));

  DecayExperimentConfig c;
  c.grid = g;
  c.field = a;
  c.placement = place;
  c.initial = broadband_state(g, a, 10, 5);
  c.horizon = 20.0;
  const DecayReport rep = run_decay_experiment(c);
  MESSAGE("fitted " << rep.fit.rate << " predicted " << pred.gamma);
  CHECK(rep.fit.rate >= 0.9 * pred.gamma);
  for (Eigen::Index i = 0; i < rep.time.size(); ++i)
    CHECK(rep.energy(i) <= pred.prefactor * std::exp(-pred.gamma * rep.time(i)) * rep.initial_energy * (1.0 + 1e-9));
}

TEST_CASE("perturbed energies") {
  const Grid1D g = build_grid(0.0, 1.0, 100);
  const CoefficientField a = uniform_coefficient(g);
  SimulationSetup s = DampingPlacement::internal_uniform(g).setup(g, DampingLaw::linear());
  s.horizon = 10.0;
  s.dt = stable_dt(g, a, s.horizon);
  const Trajectory t = simulate(g, a, broadband_state(g, a, 10, 2), s);

  SUBCASE("epsilon = 0 is the energy") {
    for (const char* name : {"chapter1", "chapter5", "chapter6_rho"}) {
      const PerturbedSeries p = perturbed_energy_series(t, LyapunovSpec::parse(name), 0.0);
      CHECK(p.perturbed.size() == t.steps);
      CHECK((p.perturbed - p.energy).cwiseAbs().maxCoeff() == 0.0);
      CHECK((p.energy - t.energy_staggered.head(t.steps)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("chapter1 functional is monotone at the explicit epsilon") {
    const DecayConstants c = decay_constants(g, a, DampingLaw::linear(), DampingPlacement::internal_uniform(g));
    const double eps = *predicted_decay(DampingLaw::linear(), DampingPlacement::internal_uniform(g), c).epsilon;
    const PerturbedSeries p = perturbed_energy_series(t, LyapunovSpec::parse("chapter1"), eps);
    const double e0 = p.energy(0);
    double worst = 0.0;
    for (Eigen::Index k = 1; k < p.perturbed.size(); ++k)
      worst = std::max(worst, p.perturbed(k) - p.perturbed(k - 1));
    MESSAGE("eps " << eps << " worst increase " << worst / e0);
    CHECK(worst <= 1e-8 * e0);
    // (1 - eps/sqrt(lambda1)) E <= E_eps <= (1 + eps/sqrt(lambda1)) E
    const double band = eps / std::sqrt(c.lambda1);
    for (Eigen::Index k = 0; k < p.perturbed.size(); ++k) {
      CHECK(p.perturbed(k) >= (1.0 - band) * p.energy(k) - 1e-14 * e0);
      CHECK(p.perturbed(k) <= (1.0 + band) * p.energy(k) + 1e-14 * e0);
    }
  }
  SUBCASE("functional of a known state") {
    // y = x(1 - x) t near t = 0 with a coarse step: phi = int y y' = t int x^2 (1-x)^2.
    const Grid1D fine = build_grid(0.0, 1.0, 400);
    Trajectory tr;
    tr.grid = fine;
    tr.dt = 1e-3;
    tr.steps = 1;
    tr.stride = 1;
    tr.time = Eigen::Vector2d(1.0, 1.001);
    tr.displacement.resize(fine.node_count(), 2);
    for (Eigen::Index j = 0; j < fine.node_count(); ++j) {
      const double x = fine.node(j);
      tr.displacement(j, 0) = x * (1.0 - x) * 1.0;
      tr.displacement(j, 1) = x * (1.0 - x) * 1.001;
    }
    tr.energy_staggered = Eigen::Vector2d(1.0, 1.0);
    const PerturbedSeries p = perturbed_energy_series(tr, LyapunovSpec::parse("chapter1"), 1.0);
    CHECK(p.functional(0) == doctest::Approx(1.0005 / 30.0).epsilon(1e-4));
    LyapunovSpec rho = LyapunovSpec::parse("chapter6_rho");
    rho.x0 = 0.5;
    // rho = 2 int y' (x - 1/2) y_x = 2 * 1.0005 int x (1-x)(x - 1/2)(1 - 2x) = -1.0005 / 30
    CHECK(perturbed_energy_series(tr, rho, 1.0).functional(0) == doctest::Approx(-1.0005 / 30.0).epsilon(1e-4));
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(LyapunovSpec::parse("chapter2"), InvalidArgument);
    CHECK_THROWS_AS(perturbed_energy_series(t, LyapunovSpec{}, -1.0), InvalidArgument);
    SimulationSetup sparse = s;
    sparse.record_stride = 0;
    CHECK_THROWS_AS(perturbed_energy_series(simulate(g, a, broadband_state(g, a, 3, 1), sparse), LyapunovSpec{}, 0.1),
                    InvalidArgument);
  }
}

TEST_CASE("sweep writes one report per run and a summary table") {
  const std::string dir = (std::filesystem::temp_directory_path() / "wavelab_sweep_test").string();
  std::filesystem::remove_all(dir);
  const std::vector<SweepEntry> entries{{"lin", "linear", "internal", 50, 20.0},
                                        {"cub", "power3", "internal", 50, 40.0},
                                        {"bnd", "linear", "boundary", 50, 20.0}};
  const SweepResult r = run_sweep(entries, 9, dir);
  CHECK(r.reports.size() == 3);
  for (const auto& e : entries) CHECK(std::filesystem::exists(dir + "/" + e.id + ".json"));
  std::ifstream csv(dir + "/sweep.csv");
  std::string header, line;
  std::getline(csv, header);
  CHECK(header.rfind("run_id,lambda,p,", 0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);
  // Same seed, same reports.
  const SweepResult again = run_sweep(entries, 9, dir);
  CHECK(again.reports[1].fit.exponent == r.reports[1].fit.exponent);
  CHECK_THROWS_AS(run_sweep({}, 1, dir), InvalidArgument);
  std::filesystem::remove_all(dir);
}
