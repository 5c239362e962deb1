#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "nonacc/assembly.hpp"
#include "oracles.hpp"

using namespace nonacc;

namespace {

Eigen::VectorXcd random_vector(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(u(rng), u(rng));
  return v;
}

}  // namespace

TEST_CASE("1D Laplacian is the (2,-1,-1)/h^2 tridiagonal") {
  const auto f = ElectromagneticField::from_strings(1, "0");
  const Grid g({0.0}, {std::numbers::pi}, {40});
  for (Scheme s : {Scheme::expanded, Scheme::gauge_covariant}) {
    const auto op = assemble_operator(f, g, s);
    const Eigen::MatrixXcd a = op.dense();
    const double h2 = g.h(0) * g.h(0);
    CHECK(a(5, 5) == Complex(2.0 / h2));
    CHECK(a(5, 6) == Complex(-1.0 / h2));
    CHECK(a(5, 4) == Complex(-1.0 / h2));
    CHECK(a(5, 7) == Complex(0.0));
    CHECK(op.lower_bandwidth() == 1);
    CHECK(op.upper_bandwidth() == 1);
    CHECK(op.structurally_symmetric());
    const auto ev = oracle::dense_eigenvalues(a);
    for (int k = 1; k <= 5; ++k) {
      CHECK(ev[static_cast<std::size_t>(k - 1)].real() ==
            doctest::Approx(oracle::discrete_laplacian_eigenvalue(k, 40, g.h(0))).epsilon(1e-12));
    }
  }
}

TEST_CASE("constant potential shifts the diagonal exactly") {
  const Grid g({0.0, 0.0}, {1.0, 1.0}, {6, 5});
  const auto a0 = assemble_operator(ElectromagneticField::from_strings(2, "0"), g, Scheme::expanded).dense();
  const auto a1 = assemble_operator(ElectromagneticField::from_strings(2, "3 - 2*i"), g, Scheme::expanded).dense();
  const Eigen::MatrixXcd diff = a1 - a0;
  CHECK((diff - Complex(3.0, -2.0) * Eigen::MatrixXcd::Identity(g.size(), g.size())).norm() == 0.0);
}

TEST_CASE("A = 0 with real V is Hermitian") {
  const Grid g({-1.0, -2.0}, {1.0, 2.0}, {7, 9});
  const auto a = assemble_operator(ElectromagneticField::from_strings(2, "x1^2 + sin(x2)"), g, Scheme::expanded).dense();
  CHECK((a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("Landau and symmetric gauges give the same spectrum") {
  const Grid g({-4.0, -4.0}, {4.0, 4.0}, {21, 21});
  const auto landau = ElectromagneticField::from_strings(2, "x1^2 + x2^2", {"-x2", "0"});
  const auto symmetric = ElectromagneticField::from_strings(2, "x1^2 + x2^2", {"-x2/2", "x1/2"});
  const auto e1 = oracle::dense_eigenvalues(assemble_operator(landau, g, Scheme::gauge_covariant).dense());
  const auto e2 = oracle::dense_eigenvalues(assemble_operator(symmetric, g, Scheme::gauge_covariant).dense());
  for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(e1[k] - e2[k]) < 1e-8);
}

TEST_CASE("gauge transformation conjugates the gauge-covariant matrix") {
  const Grid g({-1.0, -1.5}, {1.5, 1.0}, {9, 8});
  const auto f = ElectromagneticField::from_strings(2, "x1*x2", {"-x2 + x1^2", "x1 + 0.5*x2"});
  // grad of phi = x1^2 x2 + x2^3/3 - x1
  const auto fg = ElectromagneticField::from_strings(
      2, "x1*x2", {"-x2 + x1^2 + 2*x1*x2 - 1", "x1 + 0.5*x2 + x1^2 + x2^2"});
  const auto a = assemble_operator(f, g, Scheme::gauge_covariant).dense();
  const auto b = assemble_operator(fg, g, Scheme::gauge_covariant).dense();
  Eigen::VectorXcd phase(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const auto x = g.point(k);
    phase(k) = std::polar(1.0, x[0] * x[0] * x[1] + x[1] * x[1] * x[1] / 3.0 - x[0]);
  }
  // (-i grad + A + grad phi)^2 = e^{-i phi} (-i grad + A)^2 e^{i phi}
  const Eigen::MatrixXcd conj = phase.conjugate().asDiagonal() * a * phase.asDiagonal();
  CHECK((b - conj).cwiseAbs().maxCoeff() <= 1e-12 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("central magnetic gradient") {
  const auto f = ElectromagneticField::from_strings(1, "0");
  for (int n : {50, 100}) {
    const Grid g({0.0}, {std::numbers::pi}, {n});
    GridFunction u(g);
    for (int k = 0; k < n; ++k) u.values(k) = std::sin(g.coord(0, k));
    const auto du = apply_gradient(f, g, u);
    double err = 0.0;
    for (int k = 0; k < n; ++k) err = std::max(err, std::abs(du[0].values(k) - Complex(0.0, -std::cos(g.coord(0, k)))));
    CHECK(err < 0.2 * g.h(0) * g.h(0));
  }
  const auto f2 = ElectromagneticField::from_strings(2, "0", {"-x2/2", "x1/2"});
  const Grid g2({-1.0, -1.0}, {1.0, 1.0}, {9, 9});
  GridFunction delta(g2);
  delta.values(g2.index(4, 4)) = 1.0;
  for (const auto& d : apply_gradient(f2, g2, delta)) CHECK((d.values.array() != Complex(0.0)).count() <= 3);
  // <Du, v> = <u, Dv> for compactly supported u, v
  const auto u = random_compact_support(g2, 0.2, 1);
  const auto v = random_compact_support(g2, 0.2, 2);
  const auto du = apply_gradient(f2, g2, u);
  const auto dv = apply_gradient(f2, g2, v);
  for (int l = 0; l < 2; ++l) {
    const Complex lhs = inner(du[static_cast<std::size_t>(l)], v);
    const Complex rhs = inner(u, dv[static_cast<std::size_t>(l)]);
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("link gradient realises the discrete form") {
  const Grid g({-1.0, -1.0}, {1.0, 1.2}, {10, 12});
  const auto f = ElectromagneticField::from_strings(2, "x1^2 + i*x2", {"-x2*(1+x1)", "x1/2"});
  const auto op = assemble_operator(f, g, Scheme::gauge_covariant);
  const LinkGradient D(f, g);
  const auto u = random_compact_support(g, 0.1, 3).values;
  const auto v = random_compact_support(g, 0.1, 4).values;
  Eigen::VectorXcd Vu(g.size());
  for (int k = 0; k < g.size(); ++k) Vu(k) = f.potential(g.point(k)) * u(k);
  const Complex lhs = inner(g, op.apply(u), v);
  const Complex rhs = D.inner(u, v) + inner(g, Vu, v);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

  // A = 0: the expanded scheme gives the same identity
  const auto f0 = ElectromagneticField::from_strings(2, "x1^2 + i*x2");
  const auto op0 = assemble_operator(f0, g, Scheme::expanded);
  const LinkGradient D0(f0, g);
  const Complex l0 = inner(g, op0.apply(u), v);
  const Complex r0 = D0.inner(u, v) + inner(g, Vu, v);
  CHECK(std::abs(l0 - r0) <= 1e-12 * std::abs(l0));
}

TEST_CASE("both schemes are second-order consistent") {
  // u = exp(-4|x|^2) (1 + i x1), A = (x2, x1^2), V = x1 x2 on [-2,2]^2
  const auto f = ElectromagneticField::from_strings(2, "x1*x2", {"x2", "x1^2"});
  auto exact = [](double x, double y) {
    // (-i grad + A)^2 u + V u, expanded by hand: -Lap u - 2i A.grad u - i div A u + |A|^2 u + V u
    const double r2 = x * x + y * y;
    const double e = std::exp(-4.0 * r2);
    const Complex u = e * Complex(1.0, x);
    const Complex ux = e * (Complex(0.0, 1.0) - 8.0 * x * Complex(1.0, x));
    const Complex uy = -8.0 * y * u;
    const Complex uxx = e * (-8.0 * x * Complex(0.0, 1.0) - 8.0 * Complex(1.0, x) - 8.0 * x * Complex(0.0, 1.0) +
                             64.0 * x * x * Complex(1.0, x));
    const Complex uyy = (-8.0 + 64.0 * y * y) * u;
    const double a1 = y, a2 = x * x;
    const double divA = 0.0;
    return -(uxx + uyy) - 2.0 * Complex(0.0, 1.0) * (a1 * ux + a2 * uy) - Complex(0.0, divA) * u +
           (a1 * a1 + a2 * a2) * u + x * y * u;
  };
  for (Scheme s : {Scheme::expanded, Scheme::gauge_covariant}) {
    std::vector<double> logh, logerr;
    for (int n : {39, 79, 159}) {
      const Grid g({-2.0, -2.0}, {2.0, 2.0}, {n, n});
      const auto op = assemble_operator(f, g, s);
      Eigen::VectorXcd u(g.size()), ref(g.size());
      for (int k = 0; k < g.size(); ++k) {
        const auto x = g.point(k);
        u(k) = std::exp(-4.0 * (x[0] * x[0] + x[1] * x[1])) * Complex(1.0, x[0]);
        ref(k) = exact(x[0], x[1]);
      }
      logh.push_back(std::log(g.h(0)));
      logerr.push_back(std::log((op.apply(u) - ref).cwiseAbs().maxCoeff()));
    }
    CHECK(oracle::fit_slope(logh, logerr) >= 1.9);
  }
}
