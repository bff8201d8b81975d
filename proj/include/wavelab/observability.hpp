#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wavelab/dynamics.hpp"
#include "wavelab/geometry.hpp"
#include "wavelab/grid.hpp"

namespace wavelab {

struct ObservationSpec {
  enum class Kind { boundary, internal_displacement, internal_velocity };
  Kind kind = Kind::boundary;
  Side side = Side::right;
  Eigen::Index first = 0;  // inclusive node range of omega
  Eigen::Index last = -1;
  double horizon = 0.0;

  static ObservationSpec boundary(Side side, double horizon);
  static ObservationSpec internal_displacement(Eigen::Index first, Eigen::Index last,
                                               double horizon);
  static ObservationSpec internal_velocity(Eigen::Index first, Eigen::Index last, double horizon);

  std::string label() const;
};

// Nodes with l1 <= x <= l2 (to 1e-12 of a cell).
std::pair<Eigen::Index, Eigen::Index> node_range(const Grid1D& grid, double l1, double l2);

// Time level of t = t0 + horizon, which must be a level of the trajectory.
Eigen::Index level_at(const Trajectory& trajectory, double horizon);

// Trapezoid in time (and over omega for the internal kinds) of the squared observation.
double observed_energy(const Trajectory& trajectory, const ObservationSpec& spec);

struct TheoreticalBounds {
  double horizon = 0.0;
  double radius = 0.0;               // R(x0)
  double multiplier_threshold = 0.0; // 2R
  double sidewise_threshold = 0.0;   // 2 / sqrt(a0) times the length
  std::optional<double> c_inverse_multiplier;  // R / (2 (T - 2R))
  std::optional<double> c_inverse_sidewise;    // a(end) e^{TV/a0} / (T - 2 alpha)
  std::string direct_shape = "c(1+T)";         // the constant c is not explicit

  nlohmann::json to_json() const;
};

// a_end: coefficient at the observed end; only used by the sidewise constant.
TheoreticalBounds theoretical_bounds(const Domain<double>& domain, const ObserverPoint<double>& x0,
                                     double a0, double total_variation, double a_end,
                                     double horizon);

struct Ensemble {
  enum class Kind { modes, random };
  Kind kind = Kind::modes;
  Eigen::Index count = 10;
  std::uint64_t seed = 0;

  static Ensemble modes(Eigen::Index k) { return {Kind::modes, k, 0}; }
  static Ensemble random(Eigen::Index count, std::uint64_t seed) {
    return {Kind::random, count, seed};
  }
};

inline constexpr double kDefaultFilterFraction = 0.5;
inline constexpr double kUnobservableLevel = 1e-14;

// Number of kept modes, floor(fraction * (n_cells - 1)) and at least one.
Eigen::Index kept_mode_count(const Grid1D& grid, double filter_fraction);

// Random combination of the given modes (uniform coefficients in [-1, 1] for
// both components), normalized to unit energy.
State random_modal_state(const Grid1D& grid, const CoefficientField& field, const ModeSet& modes,
                         std::mt19937_64& rng);

struct ObservabilitySample {
  Eigen::Index id = 0;
  double e0 = 0.0;
  double observed = 0.0;
  double ratio = 0.0;          // observed / E0
  double inverse_ratio = 0.0;  // E0 / observed, infinite when unobservable
  bool observable = true;
};

struct ObservabilityReport {
  ObservationSpec spec;
  double horizon = 0.0;
  double filter_fraction = 1.0;
  std::vector<ObservabilitySample> samples;
  double c_emp = 0.0;
  std::optional<double> c_theo;
  TheoreticalBounds bounds;
  bool surrogate = false;  // displacement observation against the energy norm
  Eigen::Index unobservable = 0;

  bool within_theory(double slack = 0.1) const {
    return c_theo && c_emp <= *c_theo * (1.0 + slack);
  }
  nlohmann::json to_json() const;
};

ObservabilityReport observability_ratio_ensemble(const Grid1D& grid, const CoefficientField& field,
                                                 const ObservationSpec& spec,
                                                 const Ensemble& ensemble,
                                                 double filter_fraction = kDefaultFilterFraction,
                                                 double cfl = kDefaultCfl);

struct SidewiseProfile {
  Eigen::VectorXd x;
  Eigen::VectorXd F;
  double growth_factor = 1.0;  // e^{TV(a)/a0}
  double max_growth = 0.0;     // max F(x) / F(0)
  bool growth_bound_ok = false;
  bool coefficient_nondecreasing = false;
  bool nonincreasing = false;  // F(x_{j+1}) <= F(x_j) + tol F(0)

  nlohmann::json to_json() const;
};

// F(x) = (1/2) int_{alpha x}^{T - alpha x} (phi'^2 + a phi_x^2) dt, alpha = 1/sqrt(a0),
// measured from the left end, at x = 0 and the interior nodes.
SidewiseProfile sidewise_energy(const Trajectory& trajectory, const CoefficientField& field,
                                double horizon, double monotone_tol = 1e-3,
                                double growth_tol = 0.05);

}  // namespace wavelab
