#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonacc/assumptions.hpp"
#include "nonacc/eigensolve.hpp"
#include "nonacc/fields.hpp"
#include "nonacc/grid.hpp"

namespace nonacc {

struct AgmonProfile {
  Complex lambda;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  Grid grid;
  int base_index = 0;
  std::vector<double> base_point;
  /// w = (gamma1 |V| - Re lambda - |Im lambda| - gamma2)_+ at the nodes.
  Eigen::VectorXd weight;
  /// Agmon distance to the base point, solving |grad d|^2 = w.
  Eigen::VectorXd distance;
};

/// Origin when it lies in the box, otherwise the centre; snapped to the nearest node.
int default_base_index(const Grid& grid);

/// Exact eikonal solution in 1D: |integral of sqrt(w)| from the base node, trapezoidal rule.
Eigen::VectorXd eikonal_1d(const Grid& grid, const Eigen::VectorXd& weight, int base_index);
/// First-order upwind fast marching for |grad d| = sqrt(w) in 2D.
Eigen::VectorXd fast_marching(const Grid& grid, const Eigen::VectorXd& weight, int base_index);

/// Distance from the weight, dispatching on dimension.
Eigen::VectorXd agmon_distance_from_weight(const Grid& grid, const Eigen::VectorXd& weight, int base_index);

AgmonProfile agmon_distance(const ElectromagneticField& field, const Grid& grid, Complex lambda, double gamma1,
                            double gamma2, std::optional<int> base_index = std::nullopt);
inline AgmonProfile agmon_distance(const ElectromagneticField& field, const Grid& grid, Complex lambda,
                                   const Certificate& cert, std::optional<int> base_index = std::nullopt) {
  return agmon_distance(field, grid, lambda, cert.gamma1, cert.gamma2, base_index);
}

/// Linear (1D) or bilinear (2D) interpolation of the distance. Points between the outermost nodes
/// and the box boundary are extrapolated from the edge cell.
double distance_at(const AgmonProfile& profile, const std::vector<double>& x);

struct DecayOptions {
  double epsilon = 0.1;
  double floor = 1e-10;
  double cap = 1e-2;
  /// Default 5% of the target rate (1 - epsilon)/3.
  std::optional<double> slope_tol;
};

struct DecayReport {
  std::string verdict;  // "pass", "fail" or "inconclusive"
  double rate = 0.0;    // (1 - epsilon)/3
  double weighted_norm = 0.0;            // ||exp(rate d_Ag) psi||
  std::optional<double> enlarged_weighted_norm;
  double norm_ratio = 1.0;               // larger over smaller of the two weighted norms
  bool stable = true;
  double slope = 0.0;                    // least-squares slope of log|psi| against d_Ag
  double slope_tol = 0.0;
  int window_size = 0;
  bool vacuous = false;                  // d_Ag vanishes identically
  bool pass() const { return verdict == "pass"; }
};

/// psi is normalized in the grid norm before use. The optional enlarged pair is the same
/// eigenfunction computed on a larger box, used for the weighted-norm stability check.
DecayReport certify_decay(const AgmonProfile& profile, const Eigen::VectorXcd& psi, const DecayOptions& opts = {},
                          const AgmonProfile* enlarged = nullptr, const Eigen::VectorXcd* enlarged_psi = nullptr);

/// One report per column of the projector range (the algebraic eigenspace). When an enlarged
/// range is supplied, each report's stability compares the largest weighted norm over the two bases.
std::vector<DecayReport> certify_generalized(const AgmonProfile& profile, const Eigen::MatrixXcd& range,
                                             const DecayOptions& opts = {}, const AgmonProfile* enlarged = nullptr,
                                             const Eigen::MatrixXcd* enlarged_range = nullptr);

/// CSV "x1[,x2],d_ag,abs_psi,log_abs_psi".
void write_profile_csv(std::ostream& os, const AgmonProfile& profile, const Eigen::VectorXcd& psi);

}  // namespace nonacc
