#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonacc/expr.hpp"

namespace nonacc {

using Complex = std::complex<double>;

/// Electric potential V (complex) and magnetic potential A (real, d components) in dimension d.
///
/// All first partials of V and A, the magnetic tensor B_jk = d_j A_k - d_k A_j and its first
/// partials are differentiated symbolically once at construction.
class ElectromagneticField {
public:
  ElectromagneticField(int dim, expr::Expr V, std::vector<expr::Expr> A);

  /// Parses V and the components of A; an empty A list means A = 0.
  static ElectromagneticField from_strings(int dim, const std::string& V,
                                           const std::vector<std::string>& A = {});

  int dim() const { return dim_; }
  const expr::Expr& V() const { return V_; }
  const expr::Expr& A(int k) const { return A_.at(static_cast<std::size_t>(k)); }
  bool magnetic() const { return magnetic_; }

  Complex potential(std::span<const double> x) const;
  /// Components of A at x; throws expr::EvalError when a component has a non-negligible
  /// imaginary part.
  std::vector<double> vector_potential(std::span<const double> x) const;
  /// Line integral of A along the segment [p, q] (3-point Gauss-Legendre).
  double line_integral(std::span<const double> p, std::span<const double> q) const;
  double div_A(std::span<const double> x) const;
  Eigen::MatrixXd magnetic_tensor(std::span<const double> x) const;

  const expr::Expr& dV(int j) const { return dV_[static_cast<std::size_t>(j)]; }
  /// Symbolic B_jk for j < k.
  const expr::Expr& B(int j, int k) const;
  /// Symbolic d_l B_jk for j < k.
  const expr::Expr& dB(int l, int j, int k) const;

  std::uint64_t hash() const;

private:

  int dim_;
  expr::Expr V_;
  std::vector<expr::Expr> A_;
  std::vector<expr::Expr> dV_;                     // dV_[j] = d_j V
  std::vector<std::vector<expr::Expr>> dA_;        // dA_[j][k] = d_j A_k
  std::vector<std::vector<expr::Expr>> B_;         // B_[j][k], j < k only
  std::vector<std::vector<std::vector<expr::Expr>>> dB_;  // dB_[l][j][k] = d_l B_jk, j < k
  bool magnetic_ = false;
};

/// Pointwise weights derived from (V, B).
struct WeightSample {
  std::vector<double> x;
  Complex V;
  double V1 = 0.0;
  double V2 = 0.0;
  double abs_V = 0.0;
  Eigen::MatrixXd B;      // skew-symmetric
  double abs_B = 0.0;     // Frobenius norm over all (j, k)
  double m = 1.0;         // sqrt(1 + |B|^2 + |V|^2)
  double phi = 0.0;       // V2 / m
  Eigen::MatrixXd psi;    // B / m
  std::vector<Complex> grad_V;
  double abs_grad_V = 0.0;
  double abs_grad_B = 0.0;
  Eigen::VectorXd grad_m;
  Eigen::VectorXd grad_phi;
  std::vector<Eigen::MatrixXd> grad_psi;  // grad_psi[l] = d_l Psi
  double abs_grad_phi = 0.0;
  double abs_grad_psi = 0.0;              // Frobenius over (l, j, k)
};

WeightSample sample(const ElectromagneticField& field, std::span<const double> x);

/// L(x) = (V2^2 + |B|^2/(12 d))/m + V1 - 9(|grad Phi|^2 + |grad Psi|^2).
double assumption_lhs(const WeightSample& s, int dim);
double assumption_lhs(const ElectromagneticField& field, std::span<const double> x);

}  // namespace nonacc
