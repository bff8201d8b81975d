#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "wavelab/errors.hpp"
#include "wavelab/grid.hpp"

using namespace wavelab;

namespace {

const double kPi = std::acos(-1.0);

}  // namespace

TEST_CASE("grid layout") {
  const Grid1D g = build_grid(-1.0, 2.0, 30);
  CHECK(g.h == doctest::Approx(0.1));
  CHECK(g.node_count() == 31);
  CHECK(g.node(30) == doctest::Approx(2.0));
  CHECK(g.midpoint(0) == doctest::Approx(-0.95));
  CHECK(g.nodes().size() == 31);
  CHECK(g.midpoints().size() == 30);
  CHECK_THROWS_AS(build_grid(1.0, 0.0, 10), InvalidArgument);
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 2), InvalidArgument);
  CHECK_THROWS_AS(build_grid(0.0, 1.0, kMaxCells + 1), InvalidArgument);
}

TEST_CASE("coefficient sampling and bounds") {
  const Grid1D g = build_grid(0.0, 1.0, 10);
  const auto jump = sample_coefficient(g, [](double x) { return x < 0.5 ? 1.0 : 4.0; });
  CHECK(jump.a0 == 1.0);
  CHECK(jump.a1 == 4.0);
  CHECK(jump.total_variation == doctest::Approx(3.0));
  CHECK(jump.at_node(5) == doctest::Approx(2.5));
  CHECK(uniform_coefficient(g, 2.0).is_constant());
  CHECK_THROWS_AS(sample_coefficient(g, [](double x) { return x - 0.5; }), InvalidArgument);
}

TEST_CASE("coefficient table from csv") {
  const std::string path = "test_grid_coefficient.csv";
  {
    std::ofstream out(path);
    out << "x,a\n0,1\n1,3\n";
  }
  const CoefficientTable t = read_coefficient_csv(path);
  CHECK(t(0.5) == doctest::Approx(2.0));
  CHECK(t(-1.0) == doctest::Approx(1.0));
  CHECK(t(2.0) == doctest::Approx(3.0));
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_coefficient_csv("does_not_exist.csv"), InvalidArgument);
}

TEST_CASE("operator is symmetric and negative") {
  const Grid1D g = build_grid(0.0, 1.0, 40);
  const auto f = sample_coefficient(g, [](double x) { return 1.0 + 0.5 * std::sin(3.0 * x); });
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd u(g.interior_count()), v(g.interior_count());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u(i) = n01(rng);
      v(i) = n01(rng);
    }
    const double uv = l2_dot(g, apply_operator(g, f, u), v);
    const double vu = l2_dot(g, u, apply_operator(g, f, v));
    CHECK(uv == doctest::Approx(vu).epsilon(1e-12));
    CHECK(l2_dot(g, apply_operator(g, f, u), u) < 0.0);
  }
}

TEST_CASE("eigenpairs match the closed form") {
  const Grid1D g = build_grid(0.0, 2.0, 50);
  const auto f = uniform_coefficient(g);
  const ModeSet m = dirichlet_eigenpairs(g, f, 6);
  REQUIRE(m.count() == 6);
  for (Eigen::Index k = 0; k < 6; ++k) {
    CHECK(m.eigenvalues(k) == doctest::Approx(uniform_discrete_eigenvalue(g, k + 1)).epsilon(1e-10));
    const double continuous = std::pow((k + 1) * kPi / 2.0, 2);
    const double theta = (k + 1) * kPi * g.h / 2.0;
    CHECK(std::abs(m.eigenvalues(k) - continuous) / continuous <= theta * theta / 12.0 * 1.001);
  }
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      CHECK(l2_dot(g, m.eigenvectors.col(i), m.eigenvectors.col(j)) ==
            doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
}

TEST_CASE("poisson lift inverts the operator") {
  const Grid1D g = build_grid(0.0, 1.0, 32);
  const auto f = sample_coefficient(g, [](double x) { return 2.0 + x; });
  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(g.interior_count(), -1.0, 1.0);
  const Eigen::VectorXd x = poisson_lift(g, f, rhs);
  CHECK((apply_operator(g, f, x) - rhs).norm() < 1e-10 * rhs.norm());
  CHECK(with_zero_ends(x).size() == g.node_count());
  CHECK((interior_of(with_zero_ends(x)) - x).norm() == 0.0);
}
