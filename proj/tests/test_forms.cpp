#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nonacc/forms.hpp"
#include "oracles.hpp"

using namespace nonacc;

TEST_CASE("form of the free Laplacian is the kinetic energy") {
  const auto f = ElectromagneticField::from_strings(1, "0");
  const Grid g({0.0}, {1.0}, {49});
  const FormContext ctx(f, g);
  const auto u = random_compact_support(g, 0.1, 9).values;
  const Complex q = form_Q(ctx, u, u);
  CHECK(q.real() >= 0.0);
  CHECK(std::abs(q.imag()) < 1e-12 * q.real());
}

TEST_CASE("form on a node indicator") {
  const auto f = ElectromagneticField::from_strings(2, "2.5");
  const Grid g({0.0, 0.0}, {1.0, 1.0}, {9, 9});
  const FormContext ctx(f, g);
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(g.size());
  e(g.index(4, 4)) = 1.0;
  const double hd = g.cell_volume();
  const double stencil = 2.0 / (g.h(0) * g.h(0)) + 2.0 / (g.h(1) * g.h(1));
  CHECK(form_Q(ctx, e, e).real() == doctest::Approx(stencil * hd + 2.5 * hd).epsilon(1e-13));
}

TEST_CASE("hermitian symmetry of the form holds only for real V") {
  const Grid g({-1.0}, {1.0}, {39});
  const auto u = random_compact_support(g, 0.1, 1).values;
  const auto v = random_compact_support(g, 0.1, 2).values;
  const FormContext real_ctx(ElectromagneticField::from_strings(1, "x1^2", {"x1"}), g);
  CHECK(std::abs(form_Q(real_ctx, u, v) - std::conj(form_Q(real_ctx, v, u))) < 1e-10);
  const FormContext cplx_ctx(ElectromagneticField::from_strings(1, "x1^2 + i*x1"), g);
  CHECK(std::abs(form_Q(cplx_ctx, u, v) - std::conj(form_Q(cplx_ctx, v, u))) > 1e-3);
}

TEST_CASE("coercivity collapses to half the kinetic energy for V = 1") {
  const auto f = ElectromagneticField::from_strings(1, "1");
  const Grid g({0.0}, {1.0}, {59});
  const FormContext ctx(f, g);
  const auto u = random_compact_support(g, 0.2, 4).values;
  const auto gap = coercivity_gap(ctx, u, 0.0, WeightFunction::zero(g));
  CHECK(gap.gap == doctest::Approx(0.5 * ctx.gradient().energy(u)).epsilon(1e-12));
}

TEST_CASE("coercivity on the paradigm potential") {
  const auto f = ElectromagneticField::from_strings(1, "-x1^2 + i*x1^3");
  const Grid g({-10.0}, {10.0}, {1999});
  const FormContext ctx(f, g);
  const auto ramp = WeightFunction::from_function(g, [](const std::vector<double>& x) {
    return std::min(std::max(x[0], 0.0), 1.0);
  });
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto u = random_compact_support(g, 0.05, s).values;
    const auto a = coercivity_gap(ctx, u, 0.0, WeightFunction::zero(g));
    const auto b = coercivity_gap(ctx, u, Complex(-3.0, 2.0), ramp);
    CHECK(a.pass());
    CHECK(b.pass());
  }
}

TEST_CASE("certified coercivity on the paradigm potential") {
  const auto f = ElectromagneticField::from_strings(1, "-x1^2 + i*x1^3");
  const Grid g({-10.0}, {10.0}, {1999});
  const auto cert = certify(f, g, default_gamma1_ladder(), 10.0);
  REQUIRE(cert.valid);
  const FormContext ctx(f, g);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto u = random_compact_support(g, 0.05, 100 + s).values;
    CHECK(certified_coercivity_gap(ctx, u, Complex(1.0, -4.0), cert).pass());
  }
}

TEST_CASE("lemma identities and examples") {
  const auto f0 = ElectromagneticField::from_strings(1, "x1^2");
  const Grid g({0.0}, {std::numbers::pi}, {63});
  const FormContext ctx(f0, g);
  const auto u = random_compact_support(g, 0.1, 5).values;

  LemmaParams one;
  one.chi = Eigen::VectorXd::Ones(g.size());
  const auto loc = lemma_gap(ctx, Lemma::loc, u, one);
  CHECK(std::abs(loc.gap) <= 1e-12 * std::abs(loc.lhs));

  const auto bmbv = lemma_gap(ctx, Lemma::BmBV, u);
  CHECK(bmbv.lhs == 0.0);
  CHECK(bmbv.gap == doctest::Approx(3.0 * ctx.gradient().energy(u)));

  // eigenvector of the Dirichlet Laplacian: gap = (lambda - 1)^2 ||u||^2
  for (int k : {1, 2, 3}) {
    Eigen::VectorXcd s(g.size());
    for (int j = 0; j < g.size(); ++j) s(j) = std::sin(k * g.coord(0, j));
    const double lam = oracle::discrete_laplacian_eigenvalue(k, g.n(0), g.h(0));
    LemmaParams p;
    p.delta = 1.0;
    const auto na = lemma_gap(ctx, Lemma::nablaA, s, p);
    CHECK(na.gap == doctest::Approx((lam - 1.0) * (lam - 1.0) * norm(g, s) * norm(g, s)).epsilon(1e-10));
  }

  const auto b2 = lemma_gap(ctx, Lemma::B2, u);
  CHECK(b2.constant > 0.0);
  CHECK(b2.pass());
  CHECK_THROWS_AS(lemma_from_string("nope"), std::invalid_argument);
}

TEST_CASE("lemma gaps on a magnetic field") {
  const auto f = ElectromagneticField::from_strings(2, "x1^2 + x2^2 + i*x1", {"-x2*(1 + x1^2/4)", "x1/2"});
  const Grid g({-3.0, -3.0}, {3.0, 3.0}, {47, 47});
  const FormContext ctx(f, g);
  LemmaParams p;
  p.chi = Eigen::VectorXd(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const auto x = g.point(k);
    p.chi(k) = std::exp(-(x[0] * x[0] + x[1] * x[1]) / 4.0);
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto u = random_compact_support(g, 0.1, s).values;
    CHECK(lemma_gap(ctx, Lemma::BmBV, u).pass());
    CHECK(lemma_gap(ctx, Lemma::loc, u, p).pass());
    for (double delta : {0.1, 1.0, 10.0}) {
      p.delta = delta;
      CHECK(lemma_gap(ctx, Lemma::nablaA, u, p).gap >= 0.0);
    }
  }
}

TEST_CASE("loc mismatch converges at second order for smooth data") {
  const auto f = ElectromagneticField::from_strings(1, "x1^2", {"x1^2/2"});
  std::vector<double> logh, logerr;
  for (int n : {99, 199, 399}) {
    const Grid g({-4.0}, {4.0}, {n});
    const FormContext ctx(f, g);
    Eigen::VectorXcd u(g.size());
    LemmaParams p;
    p.chi = Eigen::VectorXd(g.size());
    for (int k = 0; k < g.size(); ++k) {
      const double x = g.coord(0, k);
      u(k) = std::exp(-x * x) * Complex(std::cos(2 * x), std::sin(x));
      p.chi(k) = 1.0 / (1.0 + x * x);
    }
    logh.push_back(std::log(g.h(0)));
    logerr.push_back(std::log(-lemma_gap(ctx, Lemma::loc, u, p).gap));
  }
  CHECK(oracle::fit_slope(logh, logerr) >= 1.5);
}

TEST_CASE("graph norm estimate") {
  const Grid g({-5.0}, {5.0}, {199});
  CHECK(graph_norm_estimate(FormContext(ElectromagneticField::from_strings(1, "0"), g), 0.5, 20, 1) == 0.0);
  CHECK(graph_norm_estimate(FormContext(ElectromagneticField::from_strings(1, "3"), g), 0.5, 20, 1) == 0.0);
  const double c = graph_norm_estimate(FormContext(ElectromagneticField::from_strings(1, "-x1^2 + i*x1^3"), g), 0.5, 200, 1);
  CHECK(std::isfinite(c));
  CHECK(c >= 0.0);
}
