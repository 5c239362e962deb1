#pragma once

#include <string>
#include <vector>

#include "nonacc/fields.hpp"
#include "nonacc/grid.hpp"

namespace nonacc {

/// Constants (gamma1, gamma2) with L(x) >= gamma1 |V(x)| - gamma2 at every sampled node.
struct Certificate {
  bool valid = false;
  std::string status;  // "certified" or "no certificate under cap"
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma2_cap = 0.0;

  // sampling grid
  std::vector<double> lower, upper;
  std::vector<int> n;
  double h = 0.0;

  /// Margin L - gamma1 |V| + gamma2 over the sampling grid.
  std::vector<double> worst_point;
  double min_margin = 0.0;
  double median_margin = 0.0;
  /// Histogram of margins: bin edges (size bins+1) and counts.
  std::vector<double> margin_edges;
  std::vector<int> margin_counts;

  /// gamma2(gamma1) for every ladder value that was evaluated.
  std::vector<double> ladder_gamma1;
  std::vector<double> ladder_gamma2;

  /// Re-check of (gamma1, gamma2) on the grid refined twice along each axis.
  double refined_min_margin = 0.0;
  double refined_gamma2 = 0.0;
  double margin_drop = 0.0;
};

/// Default candidate ladder {2^k/16 : k = 0..8}.
std::vector<double> default_gamma1_ladder();

/// gamma2(gamma1) := max(0, max over the grid of gamma1 |V| - L).
double gamma2_for(const ElectromagneticField& field, const Grid& grid, double gamma1);

/// Picks the largest candidate gamma1 whose gamma2 does not exceed the cap.
Certificate certify(const ElectromagneticField& field, const Grid& grid,
                    const std::vector<double>& gamma1_candidates, double gamma2_cap);

struct AsymptoticReport {
  std::vector<double> radii;
  std::vector<double> ratio1;  // max over |x| = r of (|grad V| + |grad B|) / m^{3/2}
  std::vector<double> ratio2;  // max over |x| = r of (V1)_- / m
  double tolerance = 0.1;
  bool ratio1_pass = false;
  bool ratio2_pass = false;
  bool pass = false;
};

/// Samples the two endpoints in d = 1 and `angular_samples` equispaced directions in d = 2.
AsymptoticReport diagnose_asymptotics(const ElectromagneticField& field,
                                      const std::vector<double>& radii, double tolerance = 0.1,
                                      int angular_samples = 64);

}  // namespace nonacc
