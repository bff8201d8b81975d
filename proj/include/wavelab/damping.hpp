#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace wavelab {

// Exponents and constants certifying
//   g(s)s >= c|s|^{p+1},  |g(s)| <= C|s|^lambda   on [-1, 1].
struct DampingExponents {
  double lambda = 1.0;
  double p = 1.0;
  double c = 1.0;
  double C = 1.0;
};

// Nondecreasing feedback g with g(0) = 0.
struct DampingLaw {
  std::string name;
  std::function<double(double)> g;
  std::function<double(double)> g_prime;  // optional, speeds up the implicit solve
  std::optional<DampingExponents> exponents;
  std::optional<double> linear_gain;  // set when g(s) = gain * s

  double operator()(double s) const { return g(s); }

  static DampingLaw linear(double gain = 1.0);
  // g(s) = |s|^{p-1} s, so that g(s)s = |s|^{p+1}.
  static DampingLaw power(double p);
  // g(s) = s / (1 + |s|).
  static DampingLaw saturating();
  // Piecewise-linear interpolation of (s_k, g_k); no certified exponents.
  static DampingLaw table(Eigen::VectorXd s, Eigen::VectorXd values);
};

// Checks g(0) = 0 and monotonicity on a symmetric lattice of the given span.
bool is_admissible(const DampingLaw& law, double span = 10.0, int samples = 2001);

// Solves mass * v + weight * g(v) = rhs for v (strictly increasing left side).
// Safeguarded Newton on the bracket [min(0, rhs/mass), max(0, rhs/mass)].
double solve_damped_velocity(double mass, double weight, const DampingLaw& law, double rhs);

}  // namespace wavelab
