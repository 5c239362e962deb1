#include "nonacc/linalg.hpp"

#include <cmath>
#include <limits>

namespace nonacc {

BandedLU::BandedLU(const SparseComplexOperator::Matrix& a, Complex shift, int kl, int ku)
    : n_(static_cast<int>(a.rows())), kl_(kl), ku_(ku), band_(a.rows(), 2 * kl + ku + 1), pivot_(static_cast<std::size_t>(a.rows())) {
  band_.setZero();
  double scale = 0.0;
  for (int r = 0; r < a.outerSize(); ++r) {
    for (SparseComplexOperator::Matrix::InnerIterator it(a, r); it; ++it) {
      const int c = static_cast<int>(it.col());
      if (c - r > ku || r - c > kl) throw std::invalid_argument("entry outside the declared band");
      at(r, c) += it.value();
    }
  }
  for (int i = 0; i < n_; ++i) at(i, i) -= shift;
  for (int i = 0; i < n_; ++i) {
    for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) scale = std::max(scale, std::abs(at(i, j)));
  }
  const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * scale;

  const int width = kl_ + ku_;
  for (int k = 0; k < n_; ++k) {
    const int last_row = std::min(n_ - 1, k + kl_);
    const int last_col = std::min(n_ - 1, k + width);
    int p = k;
    double best = std::abs(at(k, k));
    for (int i = k + 1; i <= last_row; ++i) {
      const double v = std::abs(at(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    pivot_[static_cast<std::size_t>(k)] = p;
    if (!(best > tiny) || !std::isfinite(best)) {
      throw FactorizationError("banded LU: pivot " + std::to_string(k) + " is numerically zero (shift is an eigenvalue)");
    }
    if (p != k) {
      for (int j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
    }
    const Complex inv = 1.0 / at(k, k);
    for (int i = k + 1; i <= last_row; ++i) {
      const Complex l = at(i, k) * inv;
      at(i, k) = l;
      if (l == Complex(0.0)) continue;
      for (int j = k + 1; j <= last_col; ++j) at(i, j) -= l * at(k, j);
    }
  }
}

double BandedLU::min_abs_pivot() const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_; ++i) m = std::min(m, std::abs(at(i, i)));
  return m;
}

Eigen::VectorXcd BandedLU::solve(const Eigen::VectorXcd& rhs) const {
  Eigen::VectorXcd b = rhs;
  const int width = kl_ + ku_;
  for (int k = 0; k < n_; ++k) {
    const int p = pivot_[static_cast<std::size_t>(k)];
    if (p != k) std::swap(b(k), b(p));
    const int last_row = std::min(n_ - 1, k + kl_);
    for (int i = k + 1; i <= last_row; ++i) b(i) -= at(i, k) * b(k);
  }
  for (int i = n_ - 1; i >= 0; --i) {
    Complex s = b(i);
    const int last_col = std::min(n_ - 1, i + width);
    for (int j = i + 1; j <= last_col; ++j) s -= at(i, j) * b(j);
    b(i) = s / at(i, i);
  }
  return b;
}

Eigen::VectorXcd BandedLU::solve_adjoint(const Eigen::VectorXcd& rhs) const {
  Eigen::VectorXcd z = rhs;
  const int width = kl_ + ku_;
  // U^H z = b, forward
  for (int i = 0; i < n_; ++i) {
    Complex s = z(i);
    for (int j = std::max(0, i - width); j < i; ++j) s -= std::conj(at(j, i)) * z(j);
    z(i) = s / std::conj(at(i, i));
  }
  // then the elimination steps in reverse, each followed by its row swap
  for (int k = n_ - 1; k >= 0; --k) {
    const int last_row = std::min(n_ - 1, k + kl_);
    for (int i = k + 1; i <= last_row; ++i) z(k) -= std::conj(at(i, k)) * z(i);
    const int p = pivot_[static_cast<std::size_t>(k)];
    if (p != k) std::swap(z(k), z(p));
  }
  return z;
}

struct ShiftedSolver::Sparse {
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
};

std::string ShiftedSolver::method_for(const SparseComplexOperator& op) {
  return std::max(op.lower_bandwidth(), op.upper_bandwidth()) <= kMaxBand ? "banded_lu" : "sparse_lu";
}

ShiftedSolver::ShiftedSolver(const SparseComplexOperator& op, Complex shift) : shift_(shift), method_(method_for(op)) {
  if (method_ == "banded_lu") {
    banded_ = std::make_unique<BandedLU>(op.matrix(), shift, op.lower_bandwidth(), op.upper_bandwidth());
    return;
  }
  sparse_ = std::make_unique<Sparse>();
  Eigen::SparseMatrix<Complex> a = op.matrix();
  Eigen::SparseMatrix<Complex> eye(a.rows(), a.cols());
  eye.setIdentity();
  a -= shift * eye;
  a.makeCompressed();
  sparse_->lu.analyzePattern(a);
  sparse_->lu.factorize(a);
  if (sparse_->lu.info() != Eigen::Success) {
    throw FactorizationError("sparse LU failed: " + sparse_->lu.lastErrorMessage());
  }
  // A numerically singular U shows up as a non-finite solve.
  const Eigen::VectorXcd probe = Eigen::VectorXcd::Ones(a.rows());
  const Eigen::VectorXcd x = sparse_->lu.solve(probe);
  if (!x.allFinite()) throw FactorizationError("sparse LU: shifted matrix is numerically singular");
}

ShiftedSolver::~ShiftedSolver() = default;
ShiftedSolver::ShiftedSolver(ShiftedSolver&&) noexcept = default;
ShiftedSolver& ShiftedSolver::operator=(ShiftedSolver&&) noexcept = default;

Eigen::VectorXcd ShiftedSolver::solve(const Eigen::VectorXcd& b) const {
  if (banded_) return banded_->solve(b);
  return sparse_->lu.solve(b);
}

Eigen::VectorXcd ShiftedSolver::solve_adjoint(const Eigen::VectorXcd& b) const {
  if (banded_) return banded_->solve_adjoint(b);
  return sparse_->lu.adjoint().solve(b);
}

}  // namespace nonacc
