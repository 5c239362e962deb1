#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nonacc/agmon.hpp"
#include "nonacc/assembly.hpp"
#include "nonacc/assumptions.hpp"
#include "nonacc/eigensolve.hpp"

namespace nonacc {

/// rho_c = { mu : -c - Re mu - |Im mu| > 0 }.
struct EnclosureRegion {
  double c = 0.0;
  double value(Complex mu) const { return -c - mu.real() - std::abs(mu.imag()); }
  bool contains(Complex mu) const { return value(mu) > 0.0; }
};

struct FredholmWindow {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double vinf = 0.0;  // shell-minimum proxy for the limit inferior of |V|

  EnclosureRegion resolvent_region() const { return {gamma2}; }
  EnclosureRegion region() const { return {gamma2 - gamma1 * vinf}; }
  /// gamma1 vinf - Re mu - |Im mu| - gamma2.
  double gap(Complex mu) const { return region().value(mu); }
};

enum class RegionTag { resolvent, fredholm_window, outside };
std::string to_string(RegionTag tag);

RegionTag classify(Complex mu, const Certificate& cert, double vinf);

/// Minimum of |V| over samples of the shell { |x| >= R } inside the box of `grid`. The shell
/// boundary and the box corners are always sampled. Throws std::invalid_argument for an empty shell.
double estimate_vinf(const ElectromagneticField& field, const Grid& grid, double R, int samples = 400);

struct PlacementEntry {
  Complex lambda;
  double value = 0.0;  // -gamma2 - Re lambda - |Im lambda|, must be <= 0
  bool admissible = true;  // survived the spurious-mode filter
  bool pass = true;
};

struct PlacementReport {
  double gamma2 = 0.0;
  std::vector<PlacementEntry> entries;
  int violations = 0;
  bool pass() const { return violations == 0; }
};

/// Inadmissible pairs (see `admissible`) are listed but never counted as violations.
PlacementReport placement_check(const std::vector<Eigenpair>& pairs, const Certificate& cert,
                                const std::vector<bool>& admissible = {});

/// Fraction of the grid mass of psi on nodes within `fraction` of the box width of some face.
double boundary_mass(const Grid& grid, const Eigen::VectorXcd& psi, double fraction = 0.1);

/// Spurious-mode filter: a pair is kept when its decay certificate passes or less than 1% of its
/// mass sits within 10% of the boundary.
bool admissible(const Grid& grid, const Eigen::VectorXcd& psi, const DecayReport* decay);

/// Upper bound asserted for the resolvent norm at distance g inside rho_{gamma2}: 2/g (1 + 1e-3) + 10 h^2.
double resolvent_bound(double gap, double h);

struct TruncationOptions {
  double h = 0.02;
  std::optional<double> reference_radius;  // defaults to the largest radius
  double epsilon = 0.1;
  Scheme scheme = Scheme::expanded;
  int eigenvalues_per_shift = 3;
  double tol = 1e-10;
  /// 1D only: Newton refinement of every eigenvalue on the tridiagonal determinant in 200 digits.
  bool multiprecision = true;
  int jobs = 1;
  std::uint64_t seed = 1;
};

struct TruncationTrace {
  Complex reference;          // eigenvalue on the reference box
  std::vector<Complex> lambdas;  // matched eigenvalue per radius
  std::vector<double> drifts;    // |lambda(R_k) - lambda(R_ref)|
  std::vector<double> d_ag;      // Agmon distance from the base point to the nearest point of the box boundary
  bool reliable = true;          // matching stayed within half the minimal gap
  bool admissible = true;        // reference eigenfunction passes the spurious-mode filter
  bool decreasing = false;
  bool fit_valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  bool pass = false;
};

struct TruncationStudy {
  std::vector<double> radii;
  double reference_radius = 0.0;
  double h = 0.0;
  double epsilon = 0.1;
  double rate = 0.0;  // (1 - epsilon)/3
  double gamma1 = 0.0, gamma2 = 0.0;
  bool multiprecision = false;
  std::vector<TruncationTrace> traces;
  /// Every admissible trace passes and at least one exists.
  bool pass() const;
};

/// Radii must be at least three, nondecreasing, and multiples of h so that all boxes share one lattice.
TruncationStudy truncation_study(const ElectromagneticField& field, const std::vector<double>& radii,
                                 const std::vector<Complex>& shifts, const Certificate& cert,
                                 const TruncationOptions& opts = {});

/// Newton iteration on det(T - lambda) for a tridiagonal T, carried out in 200 significant digits.
/// Returns the refined eigenvalue as a decimal string pair (re, im) together with the double rounding.
struct PreciseEigenvalue {
  std::string re, im;
  Complex value;
  int iterations = 0;
  bool converged = false;
};
PreciseEigenvalue refine_tridiagonal(const SparseComplexOperator& op, Complex guess);
/// |a - b| in 200 digits, rounded to double.
double precise_distance(const PreciseEigenvalue& a, const PreciseEigenvalue& b);

/// CSV "trace,R,re_lambda,im_lambda,drift,d_ag".
void write_truncation_csv(std::ostream& os, const TruncationStudy& study);

}  // namespace nonacc
