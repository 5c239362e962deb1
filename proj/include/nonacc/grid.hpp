#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace nonacc {

using Complex = std::complex<double>;

class GridMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform tensor-product grid of interior nodes on a box in dimension 1 or 2.
///
/// Axis i has n_i interior nodes with spacing h_i = (b_i - a_i)/(n_i + 1); the Dirichlet
/// boundary nodes are implicit. Linear indices run fastest along x1.
class Grid {
public:
  Grid(std::vector<double> lower, std::vector<double> upper, std::vector<int> n);

  /// Symmetric box [-R, R]^d with spacing as close to h as an integer node count allows.
  static Grid symmetric(int dim, double R, double h);

  int dim() const { return static_cast<int>(n_.size()); }
  int size() const { return size_; }
  int n(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
  double h(int axis) const { return h_[static_cast<std::size_t>(axis)]; }
  double lower(int axis) const { return lower_[static_cast<std::size_t>(axis)]; }
  double upper(int axis) const { return upper_[static_cast<std::size_t>(axis)]; }
  double width(int axis) const { return upper(axis) - lower(axis); }
  /// Product of the spacings, the quadrature weight of one node.
  double cell_volume() const { return cell_volume_; }
  double max_h() const;

  double coord(int axis, int i) const;
  int index(int i, int j = 0) const { return i + n_[0] * j; }
  /// Per-axis indices of a linear index.
  std::vector<int> multi_index(int index) const;
  std::vector<double> point(int index) const;
  void point(int index, std::vector<double>& out) const;
  /// Linear index of the neighbor one step along `axis` in direction `dir` (+1 or -1), or -1 when
  /// that neighbor is on the boundary.
  int neighbor(int index, int axis, int dir) const;
  /// Linear index of the node closest to x.
  int nearest(const std::vector<double>& x) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

private:
  std::vector<double> lower_, upper_, h_;
  std::vector<int> n_;
  int size_ = 0;
  double cell_volume_ = 1.0;
};

/// Complex nodal values on the interior nodes of a grid (zero on the boundary).
struct GridFunction {
  Grid grid;
  Eigen::VectorXcd values;

  explicit GridFunction(Grid g) : grid(std::move(g)), values(Eigen::VectorXcd::Zero(grid.size())) {}
  GridFunction(Grid g, Eigen::VectorXcd v);
};

/// Discrete inner product (prod h_i) sum u_j conj(v_j); linear in u.
Complex inner(const GridFunction& u, const GridFunction& v);
double norm(const GridFunction& u);

/// Same quadrature on raw nodal vectors.
Complex inner(const Grid& grid, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v);
double norm(const Grid& grid, const Eigen::VectorXcd& u);

/// Seeded uniform complex values in [-1,1] + i[-1,1] on nodes whose distance to every face is at
/// least margin times the box width along that axis; zero elsewhere.
GridFunction random_compact_support(const Grid& grid, double margin, std::uint64_t seed);

/// CSV with header "x1[,x2],re,im,abs", one row per interior node.
void write_csv(std::ostream& os, const GridFunction& u);

}  // namespace nonacc
