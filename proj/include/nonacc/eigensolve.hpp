#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonacc/assembly.hpp"
#include "nonacc/linalg.hpp"

namespace nonacc {

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ProjectorError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Eigenpair {
  Complex lambda;
  /// Unit vector in the operator's inner product (discrete L^2 when the operator has a grid).
  Eigen::VectorXcd vector;
  /// ||A psi - lambda psi|| / (1 + |lambda|), measured directly on A.
  double residual = 0.0;
  Complex shift;
  int iterations = 0;
  /// Algebraic multiplicity from a Riesz projector; 0 until computed.
  int multiplicity = 0;
};

struct ArnoldiOptions {
  int k = 6;
  int m = 0;  // subspace size; 0 selects max(2k + 1, 20) capped at N
  double tol = 1e-8;
  int max_restarts = 300;
  std::uint64_t seed = 1;
};

struct ArnoldiResult {
  std::vector<Eigenpair> pairs;  // ordered by |lambda - shift|
  Complex shift;                 // shift actually factorized (after retries)
  int shift_retries = 0;
  int restarts = 0;
  int dropped = 0;               // Ritz pairs that failed the direct residual check
  std::string factorization;
};

/// Shift-invert Krylov-Schur for eigenvalues of `op` closest to `shift`. Every returned pair is
/// re-verified on `op` itself. Factorization failures are retried with
/// shift += 1e-3 (1 + |shift|)(1 + i), at most 3 times.
ArnoldiResult shift_invert_arnoldi(const SparseComplexOperator& op, Complex shift, const ArnoldiOptions& opts);

/// Inner product used for normalization: the grid quadrature when the operator carries a grid.
double op_norm(const SparseComplexOperator& op, const Eigen::VectorXcd& v);

struct ProjectorResult {
  Complex center;
  double radius = 0.0;
  int quadrature_points = 0;
  Complex trace;
  int multiplicity = 0;
  double trace_defect = 0.0;        // |trace - multiplicity|
  double idempotency_defect = 0.0;  // ||P^2 X - P X||_2 over the orthonormalized probe X
  double quadrature_change = 0.0;   // relative change of P X from N_q/2 to N_q points
  Eigen::MatrixXcd range;           // orthonormal basis of P X (Euclidean)
};

/// Trapezoidal approximation of (1/2 pi i) \oint (z - A)^{-1} dz on the circle |z - center| = radius,
/// applied to the probe basis. Uses N_q points for the result and the N_q/2 nested subset for the
/// convergence report.
ProjectorResult riesz_projector(const SparseComplexOperator& op, Complex center, double radius, int quadrature_points,
                                const Eigen::MatrixXcd& probe_basis);

/// Computes the multiplicity of every pair with a circle of radius 0.5 x (distance to the nearest other
/// computed eigenvalue), probing with the Ritz vectors inside the circle plus `random_probes` seeded
/// random vectors. Pairs gain their multiplicity; the projector results are returned in the same order.
std::vector<ProjectorResult> assign_multiplicities(const SparseComplexOperator& op, std::vector<Eigenpair>& pairs,
                                                   const std::vector<Complex>& neighbours, int quadrature_points,
                                                   int random_probes, std::uint64_t seed);

struct ResolventProbe {
  Complex mu;
  double norm_estimate = 0.0;  // max ||R f|| / ||f|| over the iterates
  double solve_residual = 0.0;
  int iterations = 0;
  std::string factorization;
};

/// Power iteration on R^H R with R = (A - mu)^{-1}; a lower bound on ||R||.
ResolventProbe resolvent_probe(const SparseComplexOperator& op, Complex mu, int n_iters, std::uint64_t seed);

Eigen::VectorXcd random_vector(int n, std::uint64_t seed);

}  // namespace nonacc
