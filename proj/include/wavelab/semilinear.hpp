#pragma once

// Exact control of y'' - (a y_x)_x + f(y) = h chi by linearization around xi:
// f(y) = f(0) + g(xi) y with g(s) = (f(s) - f(0)) / s, iterated as a fixed point.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavelab/dynamics.hpp"
#include "wavelab/hum.hpp"

namespace wavelab {

struct Nonlinearity {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;  // optional
  std::optional<double> lipschitz_bound;  // absent for superlinear presets

  double at_zero() const { return f(0.0); }
  double derivative_at_zero() const;

  static Nonlinearity zero();
  static Nonlinearity linear(double alpha);
  static Nonlinearity sine();
  static Nonlinearity arctan();
  static Nonlinearity cubic();
  static Nonlinearity linear_arctan(double alpha);  // alpha s + arctan(s)
};

Nonlinearity nonlinearity_preset(const std::string& name, double alpha = 1.0);

inline constexpr double kRemovableThreshold = 1e-8;

// Pointwise g(xi); f'(0) where |xi| < kRemovableThreshold.
Eigen::MatrixXd effective_potential(const Eigen::MatrixXd& xi, const Nonlinearity& f);

struct LinearizedControl {
  HUMSolution hum;          // HUM for p = y - z with the potential
  Trajectory shift;         // z: backward from the target with source -f(0)
  Eigen::MatrixXd y;        // p + z at every level
  VerificationRecord verification;  // replay of the linearized system
};

// problem.potential is replaced by `potential`.
LinearizedControl solve_linearized_control(const HUMProblem& problem,
                                           const Eigen::MatrixXd& potential, double f0,
                                           const State& initial,
                                           const std::optional<State>& target = std::nullopt);

struct FixedPointOptions {
  double tol = 1e-6;
  int max_iter = 30;
  double relaxation = 1.0;
};

struct FixedPointReport {
  int iterations = 0;
  std::vector<double> diffs;          // ||xi_{k+1} - xi_k|| in discrete L2(Q)
  std::vector<double> control_norms;  // per iteration
  std::vector<double> potential_sup;  // ||g(xi_k)||_inf per iteration
  bool converged = false;
  std::string message;
  Control control;
  VerificationRecord verification;  // nonlinear replay
  double terminal_ratio = 0.0;

  nlohmann::json to_json() const;
};

FixedPointReport fixed_point_control(const HUMProblem& problem, const Nonlinearity& f,
                                     const State& initial,
                                     const std::optional<State>& target = std::nullopt,
                                     const FixedPointOptions& options = {});

// Discrete L2(Q) norm: dt h sum over all levels and nodes.
double space_time_norm(const Grid1D& grid, double dt, const Eigen::MatrixXd& field);

}  // namespace wavelab
