#include "nonacc/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>

namespace nonacc {

namespace {

// Exchanges the diagonal entries i and i+1 of the upper-triangular T by a unitary rotation,
// accumulating it into Z.
void swap_adjacent(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Z, Eigen::Index i) {
  const Complex t11 = T(i, i);
  const Complex t22 = T(i + 1, i + 1);
  const Complex v1 = T(i, i + 1);
  const Complex v2 = t22 - t11;
  const double nv = std::hypot(std::abs(v1), std::abs(v2));
  if (nv == 0.0) return;
  const Complex c = v1 / nv;
  const Complex s = v2 / nv;
  Eigen::Matrix2cd G;
  G << c, -std::conj(s), s, std::conj(c);
  T.middleCols(i, 2) = T.middleCols(i, 2) * G;
  T.middleRows(i, 2) = G.adjoint() * T.middleRows(i, 2);
  Z.middleCols(i, 2) = Z.middleCols(i, 2) * G;
  T(i + 1, i) = 0.0;
}

// Moves the diagonal entries of largest modulus to the top, in decreasing order.
void sort_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& Z) {
  const Eigen::Index m = T.rows();
  for (Eigen::Index pos = 0; pos < m; ++pos) {
    Eigen::Index best = pos;
    for (Eigen::Index i = pos + 1; i < m; ++i) {
      if (std::abs(T(i, i)) > std::abs(T(best, best))) best = i;
    }
    for (Eigen::Index i = best - 1; i >= pos; --i) swap_adjacent(T, Z, i);
  }
}

Eigen::VectorXcd orthogonal_random(const Eigen::MatrixXcd& V, Eigen::Index cols, std::uint64_t seed) {
  Eigen::VectorXcd w = random_vector(static_cast<int>(V.rows()), seed);
  for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(cols) * (V.leftCols(cols).adjoint() * w);
  return w / w.norm();
}

// Eigenvector of the leading k x k block of an upper-triangular T for its i-th diagonal entry.
Eigen::VectorXcd triangular_eigenvector(const Eigen::MatrixXcd& T, Eigen::Index i) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(T.cols());
  const Complex theta = T(i, i);
  y(i) = 1.0;
  const double guard = 1e-14 * std::max(1.0, std::abs(theta));
  for (Eigen::Index j = i - 1; j >= 0; --j) {
    Complex s = 0.0;
    for (Eigen::Index l = j + 1; l <= i; ++l) s += T(j, l) * y(l);
    Complex den = T(j, j) - theta;
    if (std::abs(den) < guard) den = guard;
    y(j) = -s / den;
  }
  return y;
}

struct Factorized {
  ShiftedSolver solver;
  int retries;
};

Factorized factorize_with_retry(const SparseComplexOperator& op, Complex shift) {
  Complex sigma = shift;
  for (int retries = 0;; ++retries) {
    try {
      return {ShiftedSolver(op, sigma), retries};
    } catch (const FactorizationError&) {
      if (retries == 3) throw;
      sigma += 1e-3 * (1.0 + std::abs(sigma)) * Complex(1.0, 1.0);
    }
  }
}

Eigen::MatrixXcd orthonormalize(const Eigen::MatrixXcd& X) {
  Eigen::MatrixXcd Q(X.rows(), X.cols());
  Eigen::Index r = 0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::VectorXcd w = X.col(j);
    const double n0 = w.norm();
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(r) * (Q.leftCols(r).adjoint() * w);
    const double n1 = w.norm();
    if (n1 <= 1e-10 * n0) continue;
    Q.col(r++) = w / n1;
  }
  return Q.leftCols(r);
}

}  // namespace

Eigen::VectorXcd random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) {
    const double re = u(rng);
    const double im = u(rng);
    v(i) = Complex(re, im);
  }
  return v;
}

double op_norm(const SparseComplexOperator& op, const Eigen::VectorXcd& v) {
  if (op.grid()) return norm(*op.grid(), v);
  return v.norm();
}

ArnoldiResult shift_invert_arnoldi(const SparseComplexOperator& op, Complex shift, const ArnoldiOptions& opts) {
  const int N = op.size();
  const int k = opts.k;
  if (k < 1 || k > N) throw std::invalid_argument("Arnoldi: need 1 <= k <= N");
  int m = opts.m > 0 ? opts.m : std::max(2 * k + 1, 20);
  m = std::min(m, N);
  if (m < k || (m == k && m < N)) throw std::invalid_argument("Arnoldi: subspace size m must exceed k (or equal N)");

  Factorized fact = factorize_with_retry(op, shift);
  const ShiftedSolver& solver = fact.solver;
  ArnoldiResult result;
  result.shift = solver.shift();
  result.shift_retries = fact.retries;
  result.factorization = solver.method();
  const Complex sigma = solver.shift();

  Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(N, m + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
  Eigen::VectorXcd v0 = random_vector(N, opts.seed);
  V.col(0) = v0 / v0.norm();
  std::uint64_t extra_seed = opts.seed * 7919 + 17;

  double krylov_tol = std::min(1e-2 * opts.tol, 1e-8);
  int start = 0;
  Eigen::MatrixXcd T, Z;
  for (int restart = 0;; ++restart) {
    for (int j = start; j < m; ++j) {
      Eigen::VectorXcd w = solver.solve(V.col(j));
      Eigen::VectorXcd h = V.leftCols(j + 1).adjoint() * w;
      w -= V.leftCols(j + 1) * h;
      const Eigen::VectorXcd h2 = V.leftCols(j + 1).adjoint() * w;
      w -= V.leftCols(j + 1) * h2;
      h += h2;
      H.col(j).head(j + 1) = h;
      const double beta = w.norm();
      if (beta <= 1e-13 * std::max(h.norm(), std::numeric_limits<double>::min())) {
        // invariant subspace found; continue with a fresh direction (zero coupling)
        H(j + 1, j) = 0.0;
        if (j + 1 < N) {
          V.col(j + 1) = orthogonal_random(V, j + 1, extra_seed++);
        } else {
          V.col(j + 1).setZero();
        }
      } else {
        H(j + 1, j) = beta;
        V.col(j + 1) = w / beta;
      }
    }

    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.topRows(m));
    T = schur.matrixT();
    Z = schur.matrixU();
    sort_schur(T, Z);
    const Eigen::RowVectorXcd b = H.row(m) * Z;

    bool krylov_converged = true;
    for (int i = 0; i < k; ++i) {
      if (std::abs(b(i)) > krylov_tol * std::abs(T(i, i))) krylov_converged = false;
    }

    // with m == N the Krylov space is the whole space and cannot improve
    if (krylov_converged || m == N) {
      // verify every wanted pair against the operator itself
      const Eigen::MatrixXcd basis = V.leftCols(m) * Z.leftCols(k);
      std::vector<Eigenpair> pairs;
      int dropped = 0;
      for (int i = 0; i < k; ++i) {
        const Eigen::VectorXcd y = triangular_eigenvector(T.topLeftCorner(k, k), i);
        Eigen::VectorXcd x = basis * y;
        x /= op_norm(op, x);
        Eigenpair p;
        p.lambda = sigma + 1.0 / T(i, i);
        p.vector = std::move(x);
        p.residual = op_norm(op, op.apply(p.vector) - p.lambda * p.vector) / (1.0 + std::abs(p.lambda));
        p.shift = sigma;
        p.iterations = restart;
        if (p.residual <= opts.tol) {
          pairs.push_back(std::move(p));
        } else {
          ++dropped;
        }
      }
      if (dropped == 0 || m == N || krylov_tol < 1e-15 || restart >= opts.max_restarts) {
        result.pairs = std::move(pairs);
        result.dropped = dropped;
        result.restarts = restart;
        break;
      }
      krylov_tol *= 1e-2;
    } else if (restart >= opts.max_restarts) {
      throw ConvergenceError("Arnoldi did not converge after " + std::to_string(opts.max_restarts) + " restarts");
    }

    const int p = std::min(m - 1, k + (m - k) / 2);
    const Eigen::MatrixXcd kept = V.leftCols(m) * Z.leftCols(p);
    V.col(p) = V.col(m);
    V.leftCols(p) = kept;
    H.setZero();
    H.topLeftCorner(p, p) = T.topLeftCorner(p, p);
    H.row(p).head(p) = b.head(p);
    start = p;
  }
  std::sort(result.pairs.begin(), result.pairs.end(), [&](const Eigenpair& a, const Eigenpair& c) {
    return std::abs(a.lambda - sigma) < std::abs(c.lambda - sigma);
  });
  return result;
}

ProjectorResult riesz_projector(const SparseComplexOperator& op, Complex center, double radius, int quadrature_points,
                                const Eigen::MatrixXcd& probe_basis) {
  if (!(radius > 0.0)) throw std::invalid_argument("projector radius must be positive");
  if (quadrature_points < 4 || quadrature_points % 2 != 0) {
    throw std::invalid_argument("projector needs an even number (>= 4) of quadrature points");
  }
  if (probe_basis.rows() != op.size()) throw std::invalid_argument("probe basis has the wrong length");
  const int nq = quadrature_points;
  // angular offset keeps the nodes off the real axis through the center
  const double phase0 = 0.3;
  std::vector<ShiftedSolver> solvers;
  std::vector<Complex> weights;
  solvers.reserve(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) {
    const Complex e = std::polar(1.0, phase0 + 2.0 * std::numbers::pi * q / nq);
    const Complex z = center + radius * e;
    try {
      solvers.emplace_back(op, z);
    } catch (const FactorizationError& err) {
      throw ProjectorError(std::string("quadrature point nearly singular: ") + err.what());
    }
    weights.push_back(radius * e);
  }
  // (z - A)^{-1} = -(A - z)^{-1}
  auto apply = [&](const Eigen::MatrixXcd& X, Eigen::MatrixXcd* half) {
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(X.rows(), X.cols());
    if (half) *half = Eigen::MatrixXcd::Zero(X.rows(), X.cols());
    for (int q = 0; q < nq; ++q) {
      for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const Eigen::VectorXcd s = -solvers[static_cast<std::size_t>(q)].solve(X.col(c));
        if (!s.allFinite()) throw ProjectorError("quadrature point nearly singular: non-finite solve");
        full.col(c) += weights[static_cast<std::size_t>(q)] / static_cast<double>(nq) * s;
        if (half && q % 2 == 0) half->col(c) += weights[static_cast<std::size_t>(q)] * (2.0 / nq) * s;
      }
    }
    return full;
  };

  ProjectorResult res;
  res.center = center;
  res.radius = radius;
  res.quadrature_points = nq;
  const Eigen::MatrixXcd Q = orthonormalize(probe_basis);
  if (Q.cols() == 0) throw std::invalid_argument("probe basis is empty");
  Eigen::MatrixXcd Y1h;
  const Eigen::MatrixXcd Y1 = apply(Q, &Y1h);
  const Eigen::MatrixXcd Y2 = apply(Y1, nullptr);
  const double y1norm = Y1.norm();
  res.quadrature_change = (Y1 - Y1h).norm() / std::max(y1norm, 1.0);

  Eigen::JacobiSVD<Eigen::MatrixXcd> defect_svd(Y2 - Y1);
  res.idempotency_defect = defect_svd.singularValues().size() ? defect_svd.singularValues()(0) : 0.0;

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Y1, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double thresh = 1e-6 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > thresh) ++r;
  res.range = svd.matrixU().leftCols(r);
  if (r == 0) {
    res.trace = 0.0;
  } else {
    const Eigen::MatrixXcd PR = Y2 * svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal();
    res.trace = (res.range.adjoint() * PR).trace();
  }
  res.multiplicity = static_cast<int>(std::lround(res.trace.real()));
  res.trace_defect = std::abs(res.trace - Complex(res.multiplicity, 0.0));
  if (res.trace_defect > 0.1 || res.multiplicity < 0) {
    throw ProjectorError("ill-separated contour: projector trace " + std::to_string(res.trace.real()) + " + " +
                         std::to_string(res.trace.imag()) + "i is not near an integer");
  }
  return res;
}

std::vector<ProjectorResult> assign_multiplicities(const SparseComplexOperator& op, std::vector<Eigenpair>& pairs,
                                                   const std::vector<Complex>& neighbours, int quadrature_points,
                                                   int random_probes, std::uint64_t seed) {
  std::vector<ProjectorResult> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Complex lam = pairs[i].lambda;
    const double same = 1e-8 * (1.0 + std::abs(lam));
    double gap = std::numeric_limits<double>::infinity();
    for (const Complex& z : neighbours) {
      const double d = std::abs(z - lam);
      if (d > same) gap = std::min(gap, d);
    }
    for (const auto& p : pairs) {
      const double d = std::abs(p.lambda - lam);
      if (d > same) gap = std::min(gap, d);
    }
    if (!std::isfinite(gap)) gap = 1.0 + std::abs(lam);
    const double radius = 0.5 * gap;
    std::vector<Eigen::VectorXcd> cols;
    for (const auto& p : pairs) {
      if (std::abs(p.lambda - lam) < radius) cols.push_back(p.vector);
    }
    for (int r = 0; r < random_probes; ++r) cols.push_back(random_vector(op.size(), seed + 1000 * i + static_cast<std::uint64_t>(r)));
    Eigen::MatrixXcd X(op.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) X.col(static_cast<Eigen::Index>(c)) = cols[c];
    ProjectorResult pr = riesz_projector(op, lam, radius, quadrature_points, X);
    pairs[i].multiplicity = pr.multiplicity;
    out.push_back(std::move(pr));
  }
  return out;
}

ResolventProbe resolvent_probe(const SparseComplexOperator& op, Complex mu, int n_iters, std::uint64_t seed) {
  ResolventProbe res;
  res.mu = mu;
  const ShiftedSolver solver(op, mu);
  res.factorization = solver.method();
  Eigen::VectorXcd x = random_vector(op.size(), seed);
  x /= x.norm();
  const int iters = std::max(n_iters, 10);
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXcd y = solver.solve(x);
    res.norm_estimate = std::max(res.norm_estimate, y.norm() / x.norm());
    const Eigen::VectorXcd back = op.apply(y) - mu * y;
    res.solve_residual = std::max(res.solve_residual, (back - x).norm() / x.norm());
    Eigen::VectorXcd z = solver.solve_adjoint(y);
    const double nz = z.norm();
    if (nz == 0.0 || !std::isfinite(nz)) break;
    x = z / nz;
    res.iterations = it + 1;
  }
  return res;
}

}  // namespace nonacc
