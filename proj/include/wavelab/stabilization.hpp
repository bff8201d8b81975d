#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wavelab/damping.hpp"
#include "wavelab/dynamics.hpp"
#include "wavelab/grid.hpp"

namespace wavelab {

// Internal damping w(x) g(y') or a damped end a y_x nu = -alpha g(y') - b y
// (the other end clamped).
struct DampingPlacement {
  enum class Kind { internal, boundary };
  Kind kind = Kind::internal;
  Eigen::VectorXd weight;  // internal: node weights
  Side side = Side::right;
  double alpha = 1.0;
  double b = 0.0;

  static DampingPlacement internal_uniform(const Grid1D& grid, double weight = 1.0);
  static DampingPlacement internal(Eigen::VectorXd weight);
  static DampingPlacement boundary(Side side, double alpha, double b = 0.0);
  // alpha = (x - x0) nu at the damped end.
  static DampingPlacement boundary_from_observer(const Grid1D& grid, Side side, double x0,
                                                 double b = 0.0);

  std::string label() const;
  void validate(const Grid1D& grid) const;
  SimulationSetup setup(const Grid1D& grid, const DampingLaw& law) const;
};

enum class DecayModel { exponential, polynomial };

struct FitWindow {
  double begin = 0.0;
  double end = 0.0;
};

struct DecayFit {
  DecayModel model = DecayModel::exponential;
  double rate = 0.0;      // exponential: gamma in E ~ C e^{-gamma t}
  double exponent = 0.0;  // polynomial: slope of log E against log t
  double prefactor = 0.0;
  double r_squared = 0.0;
  Eigen::Index samples = 0;
  FitWindow window;
  bool extinct = false;  // energy hit zero (or the floor) before the window; fit skipped

  nlohmann::json to_json() const;
};

// Least squares on (t, ln E) or (ln t, ln E) over the samples inside the window.
DecayFit fit_decay_rate(const Eigen::VectorXd& time, const Eigen::VectorXd& energy,
                        DecayModel model, FitWindow window);

struct DecayConstants {
  double a0 = 0.0;  // damping bounds a0 <= gain * w(x) <= a1
  double a1 = 0.0;
  double lambda1 = 0.0;
};

DecayConstants decay_constants(const Grid1D& grid, const CoefficientField& field,
                               const DampingLaw& law, const DampingPlacement& placement);

struct DecayPrediction {
  enum class Kind { exponential, polynomial, unavailable };
  Kind kind = Kind::unavailable;
  std::optional<double> exponent;
  // Explicit constants of the perturbed-energy argument (linear internal damping everywhere).
  std::optional<double> epsilon0;
  std::optional<double> epsilon1;
  std::optional<double> epsilon;     // 0.99 min(epsilon0, epsilon1)
  std::optional<double> bound_rate;  // epsilon / 2
  double prefactor = 4.0;
  std::string basis;

  bool explicit_bound() const { return bound_rate.has_value(); }
  nlohmann::json to_json() const;
};

DecayPrediction predicted_decay(const DampingLaw& law, const DampingPlacement& placement,
                                const DecayConstants& constants);

struct DecayExperimentConfig {
  Grid1D grid;
  CoefficientField field;
  DampingPlacement placement;
  DampingLaw law = DampingLaw::linear();
  State initial;
  double horizon = 20.0;
  double dt = 0.0;
  double cfl = kDefaultCfl;
  std::optional<FitWindow> window;  // default [0.2 T, T]
  std::optional<DecayModel> model;  // default from the prediction
  double extinction_floor = 1e-13;  // relative energy below which the run counts as extinct
  double monotone_tol = 1e-10;      // per step, relative to E(0)
  double exponent_tol = 0.2;
};

struct DecayReport {
  std::string label;
  DecayFit fit;
  DecayPrediction predicted;
  DecayConstants constants;
  bool energy_nonincreasing = false;
  double max_energy_increase = 0.0;  // staggered energy, relative to E(0)
  std::optional<bool> bound_satisfied;
  Eigen::Index bound_violations = 0;
  std::optional<bool> exponent_within_tol;
  double initial_energy = 0.0;
  double final_ratio = 0.0;
  Eigen::VectorXd time;
  Eigen::VectorXd energy;

  nlohmann::json to_json() const;
};

DecayReport run_decay_experiment(const DecayExperimentConfig& config);

// Seeded random combination of modes 1..count with unit energy.
State broadband_state(const Grid1D& grid, const CoefficientField& field, Eigen::Index count,
                      std::uint64_t seed);

struct LyapunovSpec {
  enum class Kind { chapter1, chapter5, chapter6_rho };
  Kind kind = Kind::chapter1;
  double p = 1.0;
  double lambda = 1.0;
  double x0 = 0.0;  // multiplier center for rho
  double c = 0.0;   // E_eps = (1 + eps c) E + eps phi

  static LyapunovSpec parse(const std::string& name);
};

// Sampled at the half levels t_{k+1/2} of a fully recorded trajectory:
// energy is the staggered energy, phi the functional, perturbed = (1 + eps c) E + eps phi.
struct PerturbedSeries {
  Eigen::VectorXd time;
  Eigen::VectorXd energy;
  Eigen::VectorXd functional;
  Eigen::VectorXd perturbed;
};

PerturbedSeries perturbed_energy_series(const Trajectory& trajectory, const LyapunovSpec& spec,
                                        double epsilon);

struct RussellRate {
  double gamma = 0.0;
  double prefactor = 0.0;
};

// gamma = ln((1 + C0) / C0) / T, prefactor (1 + C0) / C0.
RussellRate russell_rate_bound(double horizon, double c0);

struct RussellMeasurement {
  double c0 = 0.0;  // max over the ensemble of E(T) / int_0^T alpha |y'|^2
  std::vector<double> ratios;
  double horizon = 0.0;
};

RussellMeasurement measure_russell_constant(const Grid1D& grid, const CoefficientField& field,
                                            const DampingPlacement& placement, double horizon,
                                            Eigen::Index samples, std::uint64_t seed,
                                            Eigen::Index modes = 10);

// Energy rate of a unit-speed string with y_x = -kappa y' at one end: ln((1+k)/|1-k|).
double reflection_decay_rate(double kappa);

struct OverdampingPoint {
  double kappa = 0.0;
  double fitted = 0.0;  // infinite when extinct
  double theory = 0.0;
  bool extinct = false;
};

struct OverdampingSweep {
  std::vector<OverdampingPoint> points;
  bool peak_at_transparent = false;  // largest rate at kappa = 1
  bool non_monotone = false;

  nlohmann::json to_json() const;
};

// The discrete transparent end leaves an O(h) dispersive remnant; runs that fall
// below extinction_floor * E(0) before the fit window count as extinct.
OverdampingSweep overdamping_sweep(const Grid1D& grid, const std::vector<double>& kappas,
                                   double horizon, std::uint64_t seed,
                                   double extinction_floor = 1e-3);

struct SweepEntry {
  std::string id;
  std::string law;  // linear | power<p> | saturating
  std::string placement = "internal";  // internal | boundary
  Eigen::Index n_cells = 100;
  double horizon = 100.0;
};

DampingLaw damping_law_preset(const std::string& name);

struct SweepResult {
  std::vector<DecayReport> reports;
  std::vector<std::string> ids;
};

// One JSON report per run plus sweep.csv in out_dir.
SweepResult run_sweep(const std::vector<SweepEntry>& entries, std::uint64_t seed,
                      const std::string& out_dir);

}  // namespace wavelab
