#pragma once

// Discrete HUM. The adjoint phi is the free wave from (phi0, phi1); its
// observation is the conormal trace a phi_x nu on the controlled side (or -phi
// on omega) at the interior time levels; the controlled problem is solved
// backward from rest with that control, and
//
//   Lambda(phi0, phi1) = (y'(0), -y(0)).
//
// With the pairing <(A, B), (theta0, theta1)> = h sum (A theta0 + B theta1)
// the scheme satisfies <Lambda phi, theta> = dt sum_n w[phi]^n w[theta]^n
// exactly, so Lambda is symmetric and the control norm equals <Lambda phi, phi>.
//
// The observation is multiplied by a smooth cutoff eta(t) vanishing at 0 and T.
// Without it the control does not vanish at T, the backward solve from rest
// starts with a jump, and the controlled state leaves the energy space. The
// pairing becomes dt sum eta w[phi] w[theta] and HUM minimizes int v^2 / eta.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wavelab/dynamics.hpp"
#include "wavelab/grid.hpp"

namespace wavelab {

struct ControlRegion {
  enum class Kind { boundary, internal };
  Kind kind = Kind::boundary;
  Side side = Side::right;
  Eigen::Index first = 0;  // inclusive node range of omega
  Eigen::Index last = -1;

  static ControlRegion boundary(Side side) { return {Kind::boundary, side, 0, -1}; }
  static ControlRegion internal(Eigen::Index first, Eigen::Index last) {
    return {Kind::internal, Side::right, first, last};
  }
  std::string label() const;
};

struct CGOptions {
  double tol = 1e-8;
  Eigen::Index max_iter = 0;  // 0: dimension of the kept subspace
  Eigen::Index stagnation_window = 20;
};

struct HUMProblem {
  Grid1D grid;
  CoefficientField field;
  ControlRegion region;
  double horizon = 2.5;
  double dt = 0.0;  // 0: largest stable step dividing the horizon
  double cfl = kDefaultCfl;
  double filter_fraction = 0.5;  // 1 disables filtering
  double ramp_fraction = 0.1;    // cutoff ramp width over T at each end; 0: eta = 1
  CGOptions cg;
  // Optional zeroth-order term V(x,t) y: node_count rows, 1 or steps + 1 columns.
  Eigen::MatrixXd potential;

  double time_step() const;
  double time_weight(double t) const;
  Eigen::Index steps() const;
  Eigen::Index kept_modes() const;
  // Control time of the matching theorem (one end, or the internal R(l1, l2)).
  double threshold_time() const;
  void validate() const;
};

struct AdjointData {
  Eigen::VectorXd phi0;  // interior vectors
  Eigen::VectorXd phi1;
};

// Boundary signal (steps + 1 values) or space-time field on omega
// (node_count x steps + 1, zero outside omega).
struct Control {
  ControlRegion region;
  double dt = 0.0;
  Eigen::VectorXd time;
  Eigen::VectorXd signal;
  Eigen::MatrixXd field;
  Eigen::VectorXd weight;  // eta at each level; empty: eta = 1

  // Trapezoid in time of v^2 / eta (rectangle sum over omega for the internal kind).
  double norm_sq(const Grid1D& grid) const;
  // Same without the weight.
  double l2_norm_sq(const Grid1D& grid) const;
  Control scaled(double s) const;
};

struct VerificationRecord {
  double initial_energy = 0.0;   // energy of the shifted data
  double terminal_energy = 0.0;  // energy of (y - z, y' - z') at T
  double terminal_energy_ratio = 0.0;
  bool zero_initial_energy = false;
  double control_norm_sq = 0.0;
  Trajectory replay;

  bool passed(double tol) const { return terminal_energy_ratio <= tol; }
  nlohmann::json to_json() const;
};

struct HUMSolution {
  AdjointData adjoint;
  Control control;
  double control_norm_sq = 0.0;  // <Lambda phi, phi>
  std::vector<double> cg_history;
  Eigen::Index iterations = 0;
  Eigen::Index kept_modes = 0;
  double threshold_time = 0.0;
  bool below_threshold = false;  // T at or under the theorem's control time
  VerificationRecord verification;

  nlohmann::json diagnostics_json() const;
};

// Projection onto the kept discrete eigenmodes; idempotent.
Eigen::VectorXd spectral_filter(const Grid1D& grid, const CoefficientField& field,
                                const Eigen::Ref<const Eigen::VectorXd>& interior,
                                double filter_fraction);
State spectral_filter(const Grid1D& grid, const CoefficientField& field, const State& state,
                      double filter_fraction);

// Free adjoint trajectory and the control it induces.
Trajectory adjoint_trajectory(const HUMProblem& problem, const AdjointData& data);
Control observation_control(const HUMProblem& problem, const Trajectory& adjoint);

// Forward or backward run of the controlled system over (0, T).
SimulationSetup controlled_setup(const HUMProblem& problem, const Control& control,
                                 Direction direction);

std::pair<Eigen::VectorXd, Eigen::VectorXd> apply_lambda(const HUMProblem& problem,
                                                         const AdjointData& data);
double duality_pairing(const Grid1D& grid,
                       const std::pair<Eigen::VectorXd, Eigen::VectorXd>& lambda_out,
                       const AdjointData& theta);
// Discrete observation norm of the adjoint, equal to <Lambda phi, phi>.
double observation_norm_sq(const HUMProblem& problem, const AdjointData& data);

// Terminal state (z0, z1) at T; rest when absent.
HUMSolution solve_hum(const HUMProblem& problem, const State& initial,
                      const std::optional<State>& target = std::nullopt);

// Solves Lambda phi = (y1, -y0) for already shifted data, without replay.
HUMSolution solve_hum_shifted(const HUMProblem& problem, const State& shifted);

// Free (uncontrolled) solution through the target, run backward from T.
Trajectory target_trajectory(const HUMProblem& problem, const State& target);

VerificationRecord verify_control(const HUMProblem& problem, const Control& control,
                                  const State& initial,
                                  const std::optional<State>& target = std::nullopt);

struct TwoStageControl {
  Control control;  // concatenated over (0, T)
  HUMSolution second_stage;
  Eigen::Index switch_level = 0;
};

// Boundary data w on (0, eps) (levels 0..eps/dt, vanishing at both ends),
// then HUM on (eps, T) from the reached state.
TwoStageControl two_stage_control(const HUMProblem& problem, const State& initial,
                                  const Eigen::Ref<const Eigen::VectorXd>& w, double eps);

void write_control_csv(const Grid1D& grid, const Control& control, const std::string& path);

}  // namespace wavelab
