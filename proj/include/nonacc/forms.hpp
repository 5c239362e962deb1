#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonacc/assembly.hpp"
#include "nonacc/assumptions.hpp"
#include "nonacc/fields.hpp"
#include "nonacc/grid.hpp"

namespace nonacc {

/// Real nodal weight with a nodal gradient magnitude from central differences (one-sided next to
/// the boundary).
class WeightFunction {
public:
  WeightFunction(const Grid& grid, Eigen::VectorXd values);
  static WeightFunction zero(const Grid& grid);
  static WeightFunction from_function(const Grid& grid, const std::function<double(const std::vector<double>&)>& w);

  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::VectorXd& grad_norm() const { return grad_norm_; }

private:
  Eigen::VectorXd values_;
  Eigen::VectorXd grad_norm_;
};

/// Outcome of one discrete inequality check. The inequality asserts gap >= 0; `tol` is the
/// discretization budget, so a check passes when gap >= -tol.
struct InequalityGap {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double tol = 0.0;
  /// Only for the reported-only constants (id "B2"): the smallest C for this vector.
  double constant = 0.0;
  bool pass() const { return gap >= -tol; }
};

/// Nodal samples of the field and the discrete operators needed by every form evaluation.
class FormContext {
public:
  FormContext(const ElectromagneticField& field, const Grid& grid, double kappa = 10.0);

  const ElectromagneticField& field() const { return field_; }
  const Grid& grid() const { return grid_; }
  const LinkGradient& gradient() const { return D_; }
  /// Gauge-covariant discrete operator, with and without the potential.
  const SparseComplexOperator& op() const { return op_; }
  const SparseComplexOperator& kinetic() const { return kinetic_; }

  const Eigen::VectorXcd& V() const { return V_; }
  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::VectorXd& phi() const { return phi_; }
  const Eigen::VectorXd& abs_B_sq() const { return absB2_; }
  const Eigen::VectorXd& grad_phi_sq() const { return grad_phi_sq_; }
  const Eigen::VectorXd& grad_psi_sq() const { return grad_psi_sq_; }
  double kappa() const { return kappa_; }

  /// kappa h^2 (||D(e^W u)||^2 + sum h^d (|V| + |mu|) |e^W u|^2).
  double tolerance(const Eigen::VectorXcd& ewu, Complex mu) const;

private:
  ElectromagneticField field_;
  Grid grid_;
  LinkGradient D_;
  SparseComplexOperator op_;
  SparseComplexOperator kinetic_;
  Eigen::VectorXcd V_;
  Eigen::VectorXd m_, phi_, absB2_, grad_phi_sq_, grad_psi_sq_;
  double kappa_;
};

/// Q_mu(u, v) = <D u, D v> + <V u, v> - mu <u, v> with the link gradient D.
Complex form_Q(const FormContext& ctx, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v, Complex mu = 0.0);
Complex form_Q(const ElectromagneticField& field, const Grid& grid, const GridFunction& u,
               const GridFunction& v, Complex mu = 0.0);

/// Weighted coercivity: Re Q_mu(u, e^{2W}u) + Im Q_mu(u, Phi e^{2W}u) against
/// 1/2 ||D e^W u||^2 + sum h^d |e^W u|^2 [(V2^2 + |B|^2/(12d))/m + V1 - Re mu - |Im mu|
/// - 9(|grad Phi|^2 + |grad Psi|^2 + |grad W|^2)].
InequalityGap coercivity_gap(const FormContext& ctx, const Eigen::VectorXcd& u, Complex mu, const WeightFunction& W);

/// |Q_mu(u,u)| + |Q_mu(u,Phi u)| against 1/2 ||D u||^2 + sum h^d (gamma1|V| - Re mu - |Im mu| - gamma2)|u|^2.
InequalityGap certified_coercivity_gap(const FormContext& ctx, const Eigen::VectorXcd& u, Complex mu,
                                       const Certificate& cert);

enum class Lemma { BmBV, loc, nablaA, B2 };
Lemma lemma_from_string(const std::string& id);
std::string to_string(Lemma id);

struct LemmaParams {
  Eigen::VectorXd chi;  // loc: real nodal cutoff
  double delta = 1.0;   // nablaA
};

/// Gap conventions:
///  BmBV:   3d||Du||^2 + ||(grad Psi) u||^2 - sum h^d |B|^2/m |u|^2
///  loc:    -|Re<Du, D(chi^2 u)> - ||D(chi u)||^2 + ||(grad chi) u||^2|  (the identity mismatch)
///  nablaA: delta ||L0 u||^2 + ||u||^2/delta - 2||Du||^2 with L0 the magnetic Laplacian
///  B2:     reported only; `constant` = (|| |B| u||^2 + ||m^{1/2} D u||^2) / (||L0 u||^2 + ||V u||^2 + ||u||^2)
InequalityGap lemma_gap(const FormContext& ctx, Lemma id, const Eigen::VectorXcd& u, const LemmaParams& params = {});

/// Largest sampled value of [(1-delta)(||L0 u||^2 + ||V u||^2) - ||L u||^2] / ||u||^2, clamped at 0.
double graph_norm_estimate(const FormContext& ctx, double delta, int sample_size, std::uint64_t seed,
                           double margin = 0.1);

}  // namespace nonacc
