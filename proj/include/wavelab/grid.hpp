#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace wavelab {

// Uniform grid on [x_left, x_right]; node j sits at x_left + j*h, j = 0..n_cells.
struct Grid1D {
  double x_left = 0.0;
  double x_right = 1.0;
  Eigen::Index n_cells = 0;
  double h = 0.0;

  Eigen::Index node_count() const { return n_cells + 1; }
  Eigen::Index interior_count() const { return n_cells - 1; }
  double node(Eigen::Index j) const { return x_left + static_cast<double>(j) * h; }
  double midpoint(Eigen::Index j) const { return x_left + (static_cast<double>(j) + 0.5) * h; }
  Eigen::VectorXd nodes() const;
  Eigen::VectorXd midpoints() const;
};

inline constexpr Eigen::Index kMinCells = 4;
inline constexpr Eigen::Index kMaxCells = 4096;

Grid1D build_grid(double x_left, double x_right, Eigen::Index n_cells);

// Coefficient a(x) sampled at cell midpoints (staggered): values(j) = a(x_{j+1/2}).
struct CoefficientField {
  Eigen::VectorXd values;
  double a0 = 0.0;
  double a1 = 0.0;
  double total_variation = 0.0;

  // Node value used where a pointwise a(x_j) is needed: mean of adjacent cells.
  double at_node(Eigen::Index j) const;
  bool is_constant() const { return a0 == a1; }
};

// Piecewise-linear table (x_k, a_k) with constant extrapolation.
struct CoefficientTable {
  Eigen::VectorXd x;
  Eigen::VectorXd a;

  double operator()(double at) const;
};

CoefficientField sample_coefficient(const Grid1D& grid, const std::function<double(double)>& a);
CoefficientField sample_coefficient(const Grid1D& grid, const CoefficientTable& table);
CoefficientField uniform_coefficient(const Grid1D& grid, double value = 1.0);

// Reads a CSV with header "x,a".
CoefficientTable read_coefficient_csv(const std::string& path);

// Discrete inner product h * sum u_j v_j over the given vectors.
double l2_dot(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& u,
              const Eigen::Ref<const Eigen::VectorXd>& v);

// (L_h u)_j = (a_{j+1/2}(u_{j+1}-u_j) - a_{j-1/2}(u_j-u_{j-1})) / h^2 on
// interior nodes, u given on interior nodes with homogeneous Dirichlet ends.
Eigen::VectorXd apply_operator(const Grid1D& grid, const CoefficientField& field,
                               const Eigen::Ref<const Eigen::VectorXd>& interior);

// Eigenpairs of -L_h, ascending, eigenvectors orthonormal for l2_dot.
struct ModeSet {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // interior_count x k_max

  Eigen::Index count() const { return eigenvalues.size(); }
};

ModeSet dirichlet_eigenpairs(const Grid1D& grid, const CoefficientField& field,
                             Eigen::Index k_max);

// Closed-form discrete eigenvalue for a = 1: (4/h^2) sin^2(k pi h / (2 L)) scaled to the interval.
double uniform_discrete_eigenvalue(const Grid1D& grid, Eigen::Index k);

// Solves L_h X = phi1 with homogeneous Dirichlet ends (so that psi = X + int phi
// reproduces the lifted initial data).
Eigen::VectorXd poisson_lift(const Grid1D& grid, const CoefficientField& field,
                             const Eigen::Ref<const Eigen::VectorXd>& phi1);

// Helpers to move between interior vectors and full node vectors.
Eigen::VectorXd interior_of(const Eigen::Ref<const Eigen::VectorXd>& nodes);
Eigen::VectorXd with_zero_ends(const Eigen::Ref<const Eigen::VectorXd>& interior);

}  // namespace wavelab
