#include "wavelab/grid.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "wavelab/errors.hpp"

namespace wavelab {

Eigen::VectorXd Grid1D::nodes() const {
  Eigen::VectorXd x(node_count());
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = node(j);
  return x;
}

Eigen::VectorXd Grid1D::midpoints() const {
  Eigen::VectorXd x(n_cells);
  for (Eigen::Index j = 0; j < n_cells; ++j) x(j) = midpoint(j);
  return x;
}

Grid1D build_grid(double x_left, double x_right, Eigen::Index n_cells) {
  if (!(std::isfinite(x_left) && std::isfinite(x_right)) || !(x_left < x_right))
    throw InvalidArgument("grid requires finite x_left < x_right");
  if (n_cells < kMinCells) throw InvalidArgument("grid requires at least 4 cells");
  if (n_cells > kMaxCells) throw InvalidArgument("grid is capped at 4096 cells");
  Grid1D g;
  g.x_left = x_left;
  g.x_right = x_right;
  g.n_cells = n_cells;
  g.h = (x_right - x_left) / static_cast<double>(n_cells);
  return g;
}

double CoefficientField::at_node(Eigen::Index j) const {
  const Eigen::Index n = values.size();
  if (j <= 0) return values(0);
  if (j >= n) return values(n - 1);
  return 0.5 * (values(j - 1) + values(j));
}

double CoefficientTable::operator()(double at) const {
  const Eigen::Index n = x.size();
  if (at <= x(0)) return a(0);
  if (at >= x(n - 1)) return a(n - 1);
  Eigen::Index k = 0;
  while (x(k + 1) < at) ++k;
  const double s = (at - x(k)) / (x(k + 1) - x(k));
  return (1.0 - s) * a(k) + s * a(k + 1);
}

namespace {

CoefficientField finish_field(Eigen::VectorXd values) {
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values(j)) || values(j) <= 0.0)
      throw InvalidArgument("coefficient must be positive at every sample (a >= a0 > 0)");
  }
  CoefficientField f;
  f.a0 = values.minCoeff();
  f.a1 = values.maxCoeff();
  f.total_variation =
      values.size() > 1 ? (values.tail(values.size() - 1) - values.head(values.size() - 1))
                              .cwiseAbs()
                              .sum()
                        : 0.0;
  f.values = std::move(values);
  return f;
}

}  // namespace

CoefficientField sample_coefficient(const Grid1D& grid, const std::function<double(double)>& a) {
  Eigen::VectorXd values(grid.n_cells);
  for (Eigen::Index j = 0; j < grid.n_cells; ++j) values(j) = a(grid.midpoint(j));
  return finish_field(std::move(values));
}

CoefficientField sample_coefficient(const Grid1D& grid, const CoefficientTable& table) {
  if (table.x.size() < 1 || table.x.size() != table.a.size())
    throw InvalidArgument("coefficient table needs matching, non-empty x and a columns");
  for (Eigen::Index k = 1; k < table.x.size(); ++k)
    if (!(table.x(k) > table.x(k - 1)))
      throw InvalidArgument("coefficient table x column must be strictly increasing");
  return sample_coefficient(grid, [&](double x) { return table(x); });
}

CoefficientField uniform_coefficient(const Grid1D& grid, double value) {
  return finish_field(Eigen::VectorXd::Constant(grid.n_cells, value));
}

CoefficientTable read_coefficient_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open coefficient table: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty coefficient table: " + path);
  std::vector<double> xs, as;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cx, ca;
    if (!std::getline(row, cx, ',') || !std::getline(row, ca, ','))
      throw InvalidArgument("malformed coefficient row: " + line);
    try {
      xs.push_back(std::stod(cx));
      as.push_back(std::stod(ca));
    } catch (const std::exception&) {
      throw InvalidArgument("malformed coefficient row: " + line);
    }
  }
  CoefficientTable t;
  t.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  t.a = Eigen::Map<Eigen::VectorXd>(as.data(), static_cast<Eigen::Index>(as.size()));
  return t;
}

double l2_dot(const Grid1D& grid, const Eigen::Ref<const Eigen::VectorXd>& u,
              const Eigen::Ref<const Eigen::VectorXd>& v) {
  return grid.h * u.dot(v);
}

Eigen::VectorXd apply_operator(const Grid1D& grid, const CoefficientField& field,
                               const Eigen::Ref<const Eigen::VectorXd>& interior) {
  const Eigen::Index m = grid.interior_count();
  if (interior.size() != m) throw InvalidArgument("interior vector has wrong length");
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  const auto& a = field.values;
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double left = i > 0 ? interior(i - 1) : 0.0;
    const double right = i + 1 < m ? interior(i + 1) : 0.0;
    const double u = interior(i);
    out(i) = (a(i + 1) * (right - u) - a(i) * (u - left)) * inv_h2;
  }
  return out;
}

ModeSet dirichlet_eigenpairs(const Grid1D& grid, const CoefficientField& field,
                             Eigen::Index k_max) {
  const Eigen::Index m = grid.interior_count();
  if (k_max < 1 || k_max > m) throw InvalidArgument("k_max must lie in [1, n_cells - 1]");
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  const auto& a = field.values;
  Eigen::VectorXd diag(m);
  Eigen::VectorXd sub(m - 1);
  for (Eigen::Index i = 0; i < m; ++i) diag(i) = (a(i) + a(i + 1)) * inv_h2;
  for (Eigen::Index i = 0; i + 1 < m; ++i) sub(i) = -a(i + 1) * inv_h2;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolve failed");

  ModeSet modes;
  modes.eigenvalues = solver.eigenvalues().head(k_max);
  modes.eigenvectors = solver.eigenvectors().leftCols(k_max) / std::sqrt(grid.h);
  // Fix signs so that each mode starts positive next to the left end.
  for (Eigen::Index k = 0; k < k_max; ++k) {
    auto col = modes.eigenvectors.col(k);
    Eigen::Index first = 0;
    while (first + 1 < m && std::abs(col(first)) < 1e-14 * col.cwiseAbs().maxCoeff()) ++first;
    if (col(first) < 0.0) col = -col;
  }
  return modes;
}

double uniform_discrete_eigenvalue(const Grid1D& grid, Eigen::Index k) {
  const double length = grid.x_right - grid.x_left;
  const double s = std::sin(static_cast<double>(k) * std::numbers::pi * grid.h / (2.0 * length));
  return 4.0 / (grid.h * grid.h) * s * s;
}

Eigen::VectorXd poisson_lift(const Grid1D& grid, const CoefficientField& field,
                             const Eigen::Ref<const Eigen::VectorXd>& phi1) {
  const Eigen::Index m = grid.interior_count();
  if (phi1.size() != m) throw InvalidArgument("lift input must have interior length");
  // -L_h is SPD tridiagonal; solve -L_h X = -phi1 by the Thomas algorithm.
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  const auto& a = field.values;
  Eigen::VectorXd c(m), d(m);
  double prev_c = 0.0, prev_d = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lower = i > 0 ? -a(i) * inv_h2 : 0.0;
    const double upper = i + 1 < m ? -a(i + 1) * inv_h2 : 0.0;
    const double diag = (a(i) + a(i + 1)) * inv_h2;
    const double denom = diag - lower * prev_c;
    c(i) = upper / denom;
    d(i) = (-phi1(i) - lower * prev_d) / denom;
    prev_c = c(i);
    prev_d = d(i);
  }
  Eigen::VectorXd x(m);
  x(m - 1) = d(m - 1);
  for (Eigen::Index i = m - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
  return x;
}

Eigen::VectorXd interior_of(const Eigen::Ref<const Eigen::VectorXd>& nodes) {
  if (nodes.size() < 3) throw InvalidArgument("node vector too short");
  return nodes.segment(1, nodes.size() - 2);
}

Eigen::VectorXd with_zero_ends(const Eigen::Ref<const Eigen::VectorXd>& interior) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(interior.size() + 2);
  out.segment(1, interior.size()) = interior;
  return out;
}

}  // namespace wavelab
