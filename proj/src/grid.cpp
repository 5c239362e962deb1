#include "nonacc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>

namespace nonacc {

Grid::Grid(std::vector<double> lower, std::vector<double> upper, std::vector<int> n)
    : lower_(std::move(lower)), upper_(std::move(upper)), n_(std::move(n)) {
  const std::size_t d = n_.size();
  if (d < 1 || d > 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  if (lower_.size() != d || upper_.size() != d) throw std::invalid_argument("box bounds do not match the grid dimension");
  h_.resize(d);
  size_ = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (n_[i] < 3) throw std::invalid_argument("each axis needs at least 3 interior nodes");
    if (!(upper_[i] > lower_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw std::invalid_argument("box axis " + std::to_string(i + 1) + " must satisfy a < b");
    }
    h_[i] = (upper_[i] - lower_[i]) / (n_[i] + 1);
    size_ *= n_[i];
    cell_volume_ *= h_[i];
  }
}

Grid Grid::symmetric(int dim, double R, double h) {
  const int n = static_cast<int>(std::lround(2.0 * R / h)) - 1;
  return Grid(std::vector<double>(static_cast<std::size_t>(dim), -R),
              std::vector<double>(static_cast<std::size_t>(dim), R),
              std::vector<int>(static_cast<std::size_t>(dim), n));
}

double Grid::max_h() const {
  double m = 0.0;
  for (double v : h_) m = std::max(m, v);
  return m;
}

double Grid::coord(int axis, int i) const {
  const auto a = static_cast<std::size_t>(axis);
  // measured from the box center so that symmetric boxes with equal spacing share nodes exactly
  const double center = 0.5 * (lower_[a] + upper_[a]);
  return center + (i - 0.5 * (n_[a] - 1)) * h_[a];
}

std::vector<int> Grid::multi_index(int index) const {
  if (dim() == 1) return {index};
  return {index % n_[0], index / n_[0]};
}

std::vector<double> Grid::point(int index) const {
  std::vector<double> x;
  point(index, x);
  return x;
}

void Grid::point(int index, std::vector<double>& out) const {
  out.resize(n_.size());
  if (dim() == 1) {
    out[0] = coord(0, index);
  } else {
    out[0] = coord(0, index % n_[0]);
    out[1] = coord(1, index / n_[0]);
  }
}

int Grid::neighbor(int index, int axis, int dir) const {
  if (axis == 0) {
    const int i = (dim() == 1 ? index : index % n_[0]) + dir;
    return (i < 0 || i >= n_[0]) ? -1 : index + dir;
  }
  const int j = index / n_[0] + dir;
  return (j < 0 || j >= n_[1]) ? -1 : index + dir * n_[0];
}

int Grid::nearest(const std::vector<double>& x) const {
  int idx[2] = {0, 0};
  for (int a = 0; a < dim(); ++a) {
    const auto aa = static_cast<std::size_t>(a);
    const double center = 0.5 * (lower_[aa] + upper_[aa]);
    const long k = std::lround((x[aa] - center) / h_[aa] + 0.5 * (n_[aa] - 1));
    idx[a] = static_cast<int>(std::clamp<long>(k, 0, n_[aa] - 1));
  }
  return index(idx[0], idx[1]);
}

bool Grid::operator==(const Grid& other) const {
  return n_ == other.n_ && lower_ == other.lower_ && upper_ == other.upper_;
}

GridFunction::GridFunction(Grid g, Eigen::VectorXcd v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw GridMismatch("grid function length does not match the grid");
}

Complex inner(const Grid& grid, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  if (u.size() != grid.size() || v.size() != grid.size()) throw GridMismatch("vector length does not match the grid");
  // Eigen's dot conjugates its first argument
  return grid.cell_volume() * v.dot(u);
}

double norm(const Grid& grid, const Eigen::VectorXcd& u) {
  if (u.size() != grid.size()) throw GridMismatch("vector length does not match the grid");
  return std::sqrt(grid.cell_volume()) * u.norm();
}

Complex inner(const GridFunction& u, const GridFunction& v) {
  if (u.grid != v.grid) throw GridMismatch("inner product of functions on different grids");
  return inner(u.grid, u.values, v.values);
}

double norm(const GridFunction& u) { return norm(u.grid, u.values); }

GridFunction random_compact_support(const Grid& grid, double margin, std::uint64_t seed) {
  if (!(margin > 0.0 && margin < 0.5)) throw std::invalid_argument("margin must lie in (0, 0.5)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  GridFunction u(grid);
  std::vector<double> x;
  int count = 0;
  for (int k = 0; k < grid.size(); ++k) {
    grid.point(k, x);
    bool inside = true;
    for (int a = 0; a < grid.dim(); ++a) {
      const double gap = margin * grid.width(a);
      const double slack = 1e-12 * grid.width(a);
      inside = inside && (x[static_cast<std::size_t>(a)] - grid.lower(a) >= gap - slack) &&
               (grid.upper(a) - x[static_cast<std::size_t>(a)] >= gap - slack);
    }
    if (!inside) continue;
    const double re = unit(rng);
    const double im = unit(rng);
    u.values(k) = Complex(re, im);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("margin leaves no interior nodes");
  return u;
}

void write_csv(std::ostream& os, const GridFunction& u) {
  const Grid& g = u.grid;
  os << (g.dim() == 1 ? "x1" : "x1,x2") << ",re,im,abs\n";
  os << std::setprecision(17);
  std::vector<double> x;
  for (int k = 0; k < g.size(); ++k) {
    g.point(k, x);
    for (double c : x) os << c << ',';
    const Complex z = u.values(k);
    os << z.real() << ',' << z.imag() << ',' << std::abs(z) << '\n';
  }
}

}  // namespace nonacc
