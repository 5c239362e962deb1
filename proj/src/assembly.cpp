#include "nonacc/assembly.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace nonacc {

namespace {

using Triplet = Eigen::Triplet<Complex>;

void check_dims(const ElectromagneticField& field, const Grid& grid) {
  if (field.dim() != grid.dim()) {
    throw std::invalid_argument("field dimension " + std::to_string(field.dim()) +
                                " does not match grid dimension " + std::to_string(grid.dim()));
  }
}

// Coordinates of the (possibly boundary) node at per-axis position `pos` along `axis` from node k.
std::vector<double> shifted_point(const Grid& grid, int k, int axis, int dir) {
  std::vector<double> x = grid.point(k);
  x[static_cast<std::size_t>(axis)] += dir * grid.h(axis);
  return x;
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::expanded ? "expanded" : "gauge_covariant"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "expanded") return Scheme::expanded;
  if (s == "gauge_covariant") return Scheme::gauge_covariant;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected expanded or gauge_covariant)");
}

Scheme default_scheme(const ElectromagneticField& field) {
  return field.magnetic() ? Scheme::gauge_covariant : Scheme::expanded;
}

SparseComplexOperator::SparseComplexOperator(Matrix m, std::optional<Grid> grid, std::string scheme,
                                             std::uint64_t field_hash)
    : matrix_(std::move(m)), grid_(std::move(grid)), scheme_(std::move(scheme)), field_hash_(field_hash) {
  if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("operator must be square");
  matrix_.makeCompressed();
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      lower_bw_ = std::max(lower_bw_, r - c);
      upper_bw_ = std::max(upper_bw_, c - r);
    }
  }
  const Eigen::SparseMatrix<Complex, Eigen::RowMajor> t = matrix_.transpose();
  if (t.nonZeros() != matrix_.nonZeros()) {
    structurally_symmetric_ = false;
  } else {
    for (int r = 0; r < matrix_.outerSize() && structurally_symmetric_; ++r) {
      Matrix::InnerIterator a(matrix_, r);
      Matrix::InnerIterator b(t, r);
      for (; a && b; ++a, ++b) {
        if (a.col() != b.col()) {
          structurally_symmetric_ = false;
          break;
        }
      }
      if (a || b) structurally_symmetric_ = false;
    }
  }
}

SparseComplexOperator SparseComplexOperator::from_dense(const Eigen::MatrixXcd& a) {
  Matrix m = a.sparseView(0.0, 0.0);
  return SparseComplexOperator(std::move(m), std::nullopt, "dense", 0);
}

void SparseComplexOperator::write_coordinate(std::ostream& os) const {
  os << "# rows " << matrix_.rows() << " cols " << matrix_.cols() << " nnz " << matrix_.nonZeros()
     << " scheme " << scheme_ << " (0-based: row col re im)\n";
  os << std::setprecision(17);
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) {
      os << r << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
    }
  }
}

SparseComplexOperator assemble_operator(const ElectromagneticField& field, const Grid& grid, Scheme scheme) {
  check_dims(field, grid);
  const int N = grid.size();
  const int d = grid.dim();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(N) * static_cast<std::size_t>(2 * d + 1));
  std::vector<double> x;
  for (int k = 0; k < N; ++k) {
    grid.point(k, x);
    Complex diag = field.potential(x);
    if (scheme == Scheme::expanded) {
      std::vector<double> A;
      if (field.magnetic()) {
        A = field.vector_potential(x);
        double a2 = 0.0;
        for (double a : A) a2 += a * a;
        diag += Complex(a2, -field.div_A(x));
      }
      for (int l = 0; l < d; ++l) {
        const double h = grid.h(l);
        diag += 2.0 / (h * h);
        const double al = field.magnetic() ? A[static_cast<std::size_t>(l)] : 0.0;
        for (int dir : {-1, 1}) {
          const int nb = grid.neighbor(k, l, dir);
          if (nb < 0) continue;
          // -u''/h^2 stencil plus -2i A d/dx central part
          trip.emplace_back(k, nb, Complex(-1.0 / (h * h), -dir * al / h));
        }
      }
    } else {
      for (int l = 0; l < d; ++l) {
        const double h = grid.h(l);
        diag += 2.0 / (h * h);
        for (int dir : {-1, 1}) {
          const int nb = grid.neighbor(k, l, dir);
          if (nb < 0) continue;
          const double theta = field.line_integral(x, grid.point(nb));
          trip.emplace_back(k, nb, -std::polar(1.0, theta) / (h * h));
        }
      }
    }
    trip.emplace_back(k, k, diag);
  }
  SparseComplexOperator::Matrix m(N, N);
  m.setFromTriplets(trip.begin(), trip.end());
  return SparseComplexOperator(std::move(m), grid, to_string(scheme), field.hash());
}

MagneticGradient::MagneticGradient(const ElectromagneticField& field, const Grid& grid) : grid_(grid) {
  check_dims(field, grid);
  A_.assign(static_cast<std::size_t>(grid.dim()), Eigen::VectorXd::Zero(grid.size()));
  if (!field.magnetic()) return;
  std::vector<double> x;
  for (int k = 0; k < grid.size(); ++k) {
    grid.point(k, x);
    const auto a = field.vector_potential(x);
    for (int l = 0; l < grid.dim(); ++l) A_[static_cast<std::size_t>(l)](k) = a[static_cast<std::size_t>(l)];
  }
}

std::vector<GridFunction> MagneticGradient::apply(const GridFunction& u) const {
  if (u.grid != grid_) throw GridMismatch("gradient applied to a function on another grid");
  std::vector<GridFunction> out;
  const Complex minus_i(0.0, -1.0);
  for (int l = 0; l < grid_.dim(); ++l) {
    GridFunction g(grid_);
    const double inv2h = 1.0 / (2.0 * grid_.h(l));
    for (int k = 0; k < grid_.size(); ++k) {
      const int p = grid_.neighbor(k, l, 1);
      const int q = grid_.neighbor(k, l, -1);
      const Complex up = p < 0 ? Complex(0.0) : u.values(p);
      const Complex um = q < 0 ? Complex(0.0) : u.values(q);
      g.values(k) = minus_i * (up - um) * inv2h + A_[static_cast<std::size_t>(l)](k) * u.values(k);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GridFunction> apply_gradient(const ElectromagneticField& field, const Grid& grid,
                                         const GridFunction& u) {
  return MagneticGradient(field, grid).apply(u);
}

LinkGradient::LinkGradient(const ElectromagneticField& field, const Grid& grid) : grid_(grid) {
  check_dims(field, grid);
  // Every interior node owns the link to its +e neighbour; nodes on the first layer along an
  // axis additionally own the link from the boundary.
  for (int l = 0; l < grid.dim(); ++l) {
    for (int k = 0; k < grid.size(); ++k) {
      const std::vector<double> x = grid.point(k);
      if (grid.neighbor(k, l, -1) < 0) {
        const auto xb = shifted_point(grid, k, l, -1);
        links_.push_back({-1, k, l, std::polar(1.0, field.line_integral(xb, x))});
      }
      const int nb = grid.neighbor(k, l, 1);
      const auto xn = shifted_point(grid, k, l, 1);
      links_.push_back({k, nb, l, std::polar(1.0, field.line_integral(x, xn))});
    }
  }
}

Eigen::VectorXcd LinkGradient::apply(const Eigen::VectorXcd& u) const {
  if (u.size() != grid_.size()) throw GridMismatch("link gradient applied to a vector of the wrong length");
  Eigen::VectorXcd out(num_links());
  const Complex minus_i(0.0, -1.0);
  for (std::size_t e = 0; e < links_.size(); ++e) {
    const Link& L = links_[e];
    const Complex head = L.head < 0 ? Complex(0.0) : u(L.head);
    const Complex tail = L.tail < 0 ? Complex(0.0) : u(L.tail);
    out(static_cast<Eigen::Index>(e)) = minus_i * (L.phase * head - tail) / grid_.h(L.axis);
  }
  return out;
}

double LinkGradient::energy(const Eigen::VectorXcd& u) const {
  return grid_.cell_volume() * apply(u).squaredNorm();
}

Complex LinkGradient::inner(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const {
  return grid_.cell_volume() * apply(v).dot(apply(u));
}

Eigen::VectorXd LinkGradient::link_average(const Eigen::VectorXd& nodal) const {
  Eigen::VectorXd out(num_links());
  for (std::size_t e = 0; e < links_.size(); ++e) {
    const Link& L = links_[e];
    const double a = L.tail < 0 ? nodal(L.head) : nodal(L.tail);
    const double b = L.head < 0 ? nodal(L.tail) : nodal(L.head);
    out(static_cast<Eigen::Index>(e)) = 0.5 * (a + b);
  }
  return out;
}

}  // namespace nonacc
