#pragma once

#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nonacc/assembly.hpp"

namespace nonacc {

class FactorizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// LU factorization with partial pivoting of a complex band matrix (kl sub-, ku
/// super-diagonals). Row i keeps columns i-kl .. i+kl+ku to hold the fill from row swaps.
class BandedLU {
public:
  BandedLU(const SparseComplexOperator::Matrix& a, Complex shift, int kl, int ku);

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  /// Solves (A - shift)^H x = b.
  Eigen::VectorXcd solve_adjoint(const Eigen::VectorXcd& b) const;
  double min_abs_pivot() const;

private:
  Complex& at(int i, int j) { return band_(i, j - i + kl_); }
  const Complex& at(int i, int j) const { return band_(i, j - i + kl_); }

  int n_, kl_, ku_;
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> band_;
  std::vector<int> pivot_;
};

/// Factorization of A - shift I; banded LU when the band is narrow, sparse LU otherwise.
class ShiftedSolver {
public:
  ShiftedSolver(const SparseComplexOperator& op, Complex shift);
  ~ShiftedSolver();
  ShiftedSolver(ShiftedSolver&&) noexcept;
  ShiftedSolver& operator=(ShiftedSolver&&) noexcept;

  Complex shift() const { return shift_; }
  const std::string& method() const { return method_; }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  Eigen::VectorXcd solve_adjoint(const Eigen::VectorXcd& b) const;

  /// Largest bandwidth handled by the banded path.
  static constexpr int kMaxBand = 8;
  /// Name of the factorization the constructor would choose for `op`.
  static std::string method_for(const SparseComplexOperator& op);

private:
  struct Sparse;
  Complex shift_;
  std::string method_;
  std::unique_ptr<BandedLU> banded_;
  std::unique_ptr<Sparse> sparse_;
};

}  // namespace nonacc
