#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nonacc/fields.hpp"
#include "nonacc/grid.hpp"

namespace nonacc {

enum class Scheme { expanded, gauge_covariant };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Square complex sparse matrix together with how it was assembled.
class SparseComplexOperator {
public:
  using Matrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

  SparseComplexOperator(Matrix m, std::optional<Grid> grid, std::string scheme, std::uint64_t field_hash);

  /// Wraps a dense test matrix (no grid).
  static SparseComplexOperator from_dense(const Eigen::MatrixXcd& a);

  int size() const { return static_cast<int>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }
  const std::optional<Grid>& grid() const { return grid_; }
  const std::string& scheme() const { return scheme_; }
  std::uint64_t field_hash() const { return field_hash_; }

  int lower_bandwidth() const { return lower_bw_; }
  int upper_bandwidth() const { return upper_bw_; }
  bool structurally_symmetric() const { return structurally_symmetric_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const { return matrix_ * u; }
  Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix_); }

  /// Text dump: one header line, then "row col re im" per stored entry (0-based).
  void write_coordinate(std::ostream& os) const;

private:
  Matrix matrix_;
  std::optional<Grid> grid_;
  std::string scheme_;
  std::uint64_t field_hash_ = 0;
  int lower_bw_ = 0;
  int upper_bw_ = 0;
  bool structurally_symmetric_ = true;
};

/// Discrete (-i grad + A)^2 + V with Dirichlet conditions.
///
/// expanded: -Lap_h - 2i A.grad_h - i div A + |A|^2 + V with central differences.
/// gauge_covariant: diagonal sum 2/h^2 + V, hops -exp(i theta)/h^2 where theta is the line
/// integral of A from the row node to the column node.
SparseComplexOperator assemble_operator(const ElectromagneticField& field, const Grid& grid, Scheme scheme);

/// Scheme used when none is configured: expanded without a magnetic potential, gauge_covariant
/// otherwise.
Scheme default_scheme(const ElectromagneticField& field);

/// Central-difference magnetic gradient (D_l u)_j = -i(u_{j+e} - u_{j-e})/(2h) + A_l(x_j) u_j.
class MagneticGradient {
public:
  MagneticGradient(const ElectromagneticField& field, const Grid& grid);
  std::vector<GridFunction> apply(const GridFunction& u) const;
  const Grid& grid() const { return grid_; }

private:
  Grid grid_;
  std::vector<Eigen::VectorXd> A_;  // nodal A_l
};

std::vector<GridFunction> apply_gradient(const ElectromagneticField& field, const Grid& grid,
                                         const GridFunction& u);

/// Edge-based magnetic gradient. Each link joins two neighbouring nodes along one axis (links
/// touching the boundary included) and carries (D u)_link = -i(e^{i theta} u_head - u_tail)/h.
/// Its adjoint product equals the gauge-covariant operator with V = 0, so
/// sum_links h^d |(D u)_link|^2 is the discrete magnetic kinetic energy.
class LinkGradient {
public:
  struct Link {
    int tail;  // -1 on the boundary
    int head;  // -1 on the boundary
    int axis;
    Complex phase;  // exp(i theta)
  };

  LinkGradient(const ElectromagneticField& field, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const std::vector<Link>& links() const { return links_; }
  int num_links() const { return static_cast<int>(links_.size()); }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const;
  /// Squared discrete norm h^d sum |(D u)_link|^2.
  double energy(const Eigen::VectorXcd& u) const;
  /// h^d sum (D u)_link conj((D v)_link).
  Complex inner(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const;
  /// Average of a nodal quantity over the two endpoints of each link; a boundary endpoint
  /// takes the value of the interior one.
  Eigen::VectorXd link_average(const Eigen::VectorXd& nodal) const;

private:
  Grid grid_;
  std::vector<Link> links_;
};

}  // namespace nonacc
