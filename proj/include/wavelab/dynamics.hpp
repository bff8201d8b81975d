#pragma once

// One explicit leapfrog engine for every 1-d wave system in the library:
//
//   y'' - (a y_x)_x + V(x,t) y + f(y) + w(x) g(y') = forcing + source
//
// with homogeneous or prescribed Dirichlet ends, or dissipative ends
// a y_x nu = -alpha g(y') - b y. Damping is evaluated at the centered
// velocity (y^{n+1} - y^{n-1}) / 2dt and solved nodewise, which gives the exact
// discrete balance  E^{n+1/2} - E^{n-1/2} = -dt D^n  for the staggered energy.

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "wavelab/damping.hpp"
#include "wavelab/grid.hpp"

namespace wavelab {

enum class Side { left, right };
enum class Direction { forward, backward };

struct State {
  Eigen::VectorXd y;  // node values, node_count entries
  Eigen::VectorXd v;
  double t = 0.0;
};

State zero_state(const Grid1D& grid, double t = 0.0);
// Builds a node state from interior displacement and velocity vectors.
State state_from_interior(const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Eigen::Ref<const Eigen::VectorXd>& v, double t = 0.0);
// Samples y0(x), y1(x) at the nodes.
State sample_state(const Grid1D& grid, const std::function<double(double)>& y0,
                   const std::function<double(double)>& y1, double t = 0.0);

struct DirichletZero {};
// Boundary values at the time levels t_n, n = 0..M.
struct DirichletData {
  Eigen::VectorXd signal;
};
// a y_x nu = -alpha g(y') - b y.
struct Dissipative {
  double alpha = 1.0;
  double b = 0.0;
  DampingLaw law = DampingLaw::linear();
};
using BoundaryCondition = std::variant<DirichletZero, DirichletData, Dissipative>;

struct BoundaryConditionSpec {
  BoundaryCondition left = DirichletZero{};
  BoundaryCondition right = DirichletZero{};

  const BoundaryCondition& on(Side side) const { return side == Side::left ? left : right; }
  BoundaryCondition& on(Side side) { return side == Side::left ? left : right; }
};

// Discrete constant beta of the b-augmented energy: min of the stiffness form
// plus the b boundary terms over unit vectors on the free nodes. Positive iff
// the augmented energy is a norm.
double boundary_rayleigh_minimum(const Grid1D& grid, const CoefficientField& field,
                                 const BoundaryConditionSpec& bc);

struct ForcingSpec {
  enum class Kind { none, internal, full_domain };
  Kind kind = Kind::none;
  Eigen::MatrixXd field;  // node_count x (M+1), column n at t_n
  Eigen::Index support_first = 0;
  Eigen::Index support_last = -1;  // inclusive node range for internal forcing

  static ForcingSpec none() { return {}; }
  static ForcingSpec internal(Eigen::MatrixXd field, Eigen::Index first, Eigen::Index last);
  static ForcingSpec full_domain(Eigen::MatrixXd field);
};

struct InternalDampingSpec {
  bool enabled = false;
  Eigen::VectorXd weight;  // node_count entries, >= 0
  DampingLaw law = DampingLaw::linear();

  static InternalDampingSpec none() { return {}; }
  static InternalDampingSpec uniform(const Grid1D& grid, DampingLaw law, double weight = 1.0);
};

// Zeroth-order terms: + V(x,t) y + f(y) on the left side, + source on the right.
// The potential has node_count rows and either M+1 columns or a single column.
struct ReactionTerms {
  Eigen::MatrixXd potential;
  std::function<double(double)> nonlinearity;
  double source = 0.0;
};

struct SimulationSetup {
  BoundaryConditionSpec bc;
  ForcingSpec forcing;
  InternalDampingSpec damping;
  ReactionTerms reaction;
  double horizon = 1.0;
  double dt = 0.0;
  Direction direction = Direction::forward;
  // Every k-th time level is kept in the trajectory; 0 keeps only the end states.
  Eigen::Index record_stride = 1;
  double cfl_limit = 1.0;
  double growth_limit = 1e6;
};

inline constexpr double kDefaultCfl = 0.9;

// Largest dt <= cfl * h / sqrt(a1) that divides the horizon.
double stable_dt(const Grid1D& grid, const CoefficientField& field, double horizon,
                 double cfl = kDefaultCfl);
Eigen::Index step_count(double horizon, double dt);

struct Trajectory {
  Grid1D grid;
  CoefficientField field;
  double dt = 0.0;
  Eigen::Index steps = 0;
  Eigen::VectorXd time;  // t_n, n = 0..steps

  Eigen::Index stride = 1;
  Eigen::MatrixXd displacement;  // node_count x recorded levels (n = 0, stride, ...)
  Eigen::MatrixXd velocity;
  State start;
  State end;

  Eigen::VectorXd energy;            // E(t_n) with centered velocities
  Eigen::VectorXd energy_staggered;  // E^{n+1/2}, n = 0..steps
  double energy_staggered_before = 0.0;  // E^{-1/2}
  Eigen::VectorXd dissipation;       // D^n at the centered velocity
  Eigen::VectorXd flux_left;         // three-point d y / d nu
  Eigen::VectorXd flux_right;
  Eigen::VectorXd trace_left;        // two-point conormal a y_x nu (discrete dual trace)
  Eigen::VectorXd trace_right;

  bool left_dirichlet_zero = true;
  bool right_dirichlet_zero = true;
  bool damped = false;
  bool forced = false;
  double b_left = 0.0;
  double b_right = 0.0;

  bool full_record() const { return stride == 1 && displacement.cols() == steps + 1; }
  Eigen::Index recorded_levels() const { return displacement.cols(); }
  State state_at_level(Eigen::Index n) const;  // requires a recorded level
};

Trajectory simulate(const Grid1D& grid, const CoefficientField& field, const State& initial,
                    const SimulationSetup& setup);

// (1/2) h sum [v^2 (trapezoid) + a_{j+1/2} ((y_{j+1}-y_j)/h)^2] + (b/2) boundary terms.
double energy(const Grid1D& grid, const CoefficientField& field, const State& state,
              double b_left = 0.0, double b_right = 0.0);

// Staggered leapfrog energy between two consecutive levels.
double staggered_energy(const Grid1D& grid, const CoefficientField& field,
                        const Eigen::Ref<const Eigen::VectorXd>& y_now,
                        const Eigen::Ref<const Eigen::VectorXd>& y_next, double dt,
                        double b_left = 0.0, double b_right = 0.0);

// Outward normal derivative series on a homogeneous Dirichlet side.
Eigen::VectorXd boundary_flux(const Trajectory& trajectory, Side side);

enum class BalanceKind {
  staggered,   // exact discrete identity: residual at roundoff
  collocated,  // E(t_n) with trapezoid-in-time dissipation: O(dt^2) residual
};

struct BalanceReport {
  Eigen::VectorXd residual;
  bool degenerate = false;  // undamped run: the balance is a conservation check
  double max_relative() const;
  double reference_energy = 0.0;
};

BalanceReport dissipation_balance(const Trajectory& trajectory,
                                  BalanceKind kind = BalanceKind::staggered);

struct FullDomainControl {
  ForcingSpec forcing;
  Trajectory trajectory;
};

// y(x,t) = A(t) y0 + B(t) y1 with cubic Hermite A, B vanishing to first order
// at T; the forcing is the leapfrog residual of that path, so replaying it
// through simulate reproduces the path.
FullDomainControl full_domain_control(const Grid1D& grid, const CoefficientField& field,
                                      const State& initial, double horizon, double dt = 0.0);

// Both sides of the 1-d multiplier identity for theta'' - theta_xx = f with
// multiplier q(x) theta_x; returns |lhs - rhs| / (|lhs| + |rhs| + eps).
struct IdentityResidual {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative = 0.0;
};

IdentityResidual multiplier_identity(const Trajectory& trajectory,
                                     const Eigen::Ref<const Eigen::VectorXd>& q,
                                     const Eigen::MatrixXd& forcing = {});
double multiplier_identity_residual(const Trajectory& trajectory,
                                    const Eigen::Ref<const Eigen::VectorXd>& q,
                                    const Eigen::MatrixXd& forcing = {});

// |[int phi' phi]_0^T - int int (phi'^2 - a phi_x^2)| / (T E(0)).
IdentityResidual equipartition(const Trajectory& trajectory);
double equipartition_residual(const Trajectory& trajectory);

// Second-order nodal derivative (central inside, one-sided three-point at ends).
Eigen::VectorXd nodal_derivative(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& y);

// Time-series CSV "t,E,flux_left,flux_right" and snapshot CSVs "x,y,v".
void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);
void write_snapshot_csv(const Trajectory& trajectory, Eigen::Index level, const std::string& path);

}  // namespace wavelab
