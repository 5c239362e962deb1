#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "nonacc/enclosure.hpp"

using namespace nonacc;

namespace {

Certificate cert_of(double g1, double g2) {
  Certificate c;
  c.valid = true;
  c.gamma1 = g1;
  c.gamma2 = g2;
  return c;
}

Eigenpair pair_at(Complex lambda) {
  Eigenpair p;
  p.lambda = lambda;
  return p;
}

}  // namespace

TEST_CASE("region membership") {
  CHECK(classify(-1.0, cert_of(1.0, 0.0), 0.0) == RegionTag::resolvent);
  CHECK(classify(0.0, cert_of(1.0, 0.0), 0.0) == RegionTag::outside);
  CHECK(classify(-2.0, cert_of(1.0, 0.0), 0.0) == RegionTag::resolvent);
  const Certificate c = cert_of(1.0, 0.0);
  CHECK_FALSE(EnclosureRegion{0.0}.contains(2.0));
  CHECK(classify(2.0, c, 4.0) == RegionTag::fredholm_window);
  CHECK(FredholmWindow{1.0, 0.0, 4.0}.gap(-2.0) == 6.0);
  CHECK(to_string(RegionTag::fredholm_window) == "fredholm_window");
}

TEST_CASE("regions grow as c decreases and tags are consistent") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const Complex mu(u(rng), u(rng));
    const double c = u(rng), c2 = c + std::abs(u(rng));
    if (EnclosureRegion{c2}.contains(mu)) CHECK(EnclosureRegion{c}.contains(mu));
    if (EnclosureRegion{c}.contains(mu)) CHECK(EnclosureRegion{c}.contains(mu - std::abs(u(rng))));
    const Certificate cert = cert_of(0.5, std::abs(c));
    const double vinf = std::abs(u(rng)) + 1e-3;
    if (classify(mu, cert, vinf) == RegionTag::resolvent) {
      CHECK(FredholmWindow{cert.gamma1, cert.gamma2, vinf}.region().contains(mu));
    }
  }
}

TEST_CASE("shell minimum of |V|") {
  const Grid box({-5.0}, {5.0}, {99});
  CHECK(estimate_vinf(ElectromagneticField::from_strings(1, "i*x1^3"), box, 2.0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(estimate_vinf(ElectromagneticField::from_strings(1, "exp(x1^2)"), box, 1.0) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  const auto decaying = ElectromagneticField::from_strings(1, "1/(1+x1^2)");
  CHECK(estimate_vinf(decaying, box, 5.0) == doctest::Approx(1.0 / 26.0));
  CHECK(estimate_vinf(decaying, Grid({-50.0}, {50.0}, {99}), 50.0) < 1e-3);
  CHECK_THROWS_AS(estimate_vinf(decaying, box, 6.0), std::invalid_argument);

  const Grid square({-3.0, -3.0}, {3.0, 3.0}, {9, 9});
  CHECK(estimate_vinf(ElectromagneticField::from_strings(2, "x1^2 + x2^2"), square, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("placement check") {
  const Certificate ho = cert_of(1.0, 0.0);
  const auto ok = placement_check({pair_at(1.0), pair_at(3.0), pair_at(5.0)}, ho);
  CHECK(ok.pass());
  CHECK(ok.entries[0].value == -1.0);
  const Certificate c = cert_of(0.25, 2.0);
  const auto bad = placement_check({pair_at(-3.0), pair_at(1.0)}, c);
  CHECK(bad.violations == 1);
  CHECK_FALSE(bad.entries[0].pass);
  // an inadmissible pair is reported but not counted
  const auto filtered = placement_check({pair_at(-3.0)}, c, {false});
  CHECK(filtered.pass());
  CHECK_FALSE(filtered.entries[0].admissible);
}

TEST_CASE("boundary mass and the spurious-mode filter") {
  const Grid g = Grid::symmetric(1, 5.0, 0.05);
  Eigen::VectorXcd centred(g.size()), edge(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const double x = g.point(k)[0];
    centred(k) = std::exp(-x * x);
    edge(k) = std::exp(-(x - 4.8) * (x - 4.8));
  }
  CHECK(boundary_mass(g, centred) < 1e-12);
  CHECK(boundary_mass(g, edge) > 0.5);
  CHECK(admissible(g, centred, nullptr));
  CHECK_FALSE(admissible(g, edge, nullptr));
}

TEST_CASE("resolvent norm respects the enclosure bound") {
  const auto f = ElectromagneticField::from_strings(1, "x1^2");
  const Grid g = Grid::symmetric(1, 8.0, 0.02);
  const auto op = assemble_operator(f, g, Scheme::expanded);
  for (double gap : {1.0, 3.0, 10.0}) {
    for (double im : {0.0, 2.0}) {
      const Complex mu(-gap - im, im);
      const auto probe = resolvent_probe(op, mu, 30, 5);
      CHECK(probe.norm_estimate <= resolvent_bound(gap, g.h(0)));
    }
  }
}

TEST_CASE("eigenvalue counts in a disk stabilize under refinement") {
  for (const char* V : {"x1^2", "-x1^2 + i*x1^3"}) {
    const auto f = ElectromagneticField::from_strings(1, V);
    std::vector<int> counts;
    for (double h : {0.04, 0.02, 0.01}) {
      const Grid g = Grid::symmetric(1, 8.0, h);
      ArnoldiOptions o;
      o.k = 10;
      const auto r = shift_invert_arnoldi(assemble_operator(f, g, Scheme::expanded), 6.0, o);
      int count = 0;
      for (const auto& p : r.pairs) count += std::abs(p.lambda - 6.0) < 4.4 ? 1 : 0;
      counts.push_back(count);
    }
    CHECK(counts[0] > 0);
    CHECK(counts[1] == counts[0]);
    CHECK(counts[2] == counts[1]);
  }
}

TEST_CASE("multiprecision refinement of a tridiagonal eigenvalue") {
  const auto f = ElectromagneticField::from_strings(1, "-x1^2 + i*x1^3");
  const Grid g = Grid::symmetric(1, 6.0, 0.02);
  const auto op = assemble_operator(f, g, Scheme::expanded);
  ArnoldiOptions o;
  o.k = 1;
  o.tol = 1e-12;
  const Complex lam = shift_invert_arnoldi(op, 1.0, o).pairs.at(0).lambda;
  const PreciseEigenvalue p = refine_tridiagonal(op, lam + Complex(1e-6, -1e-6));
  CHECK(p.converged);
  CHECK(std::abs(p.value - lam) < 1e-10);
  CHECK(precise_distance(p, p) == 0.0);
  const Grid square({-1.0, -1.0}, {1.0, 1.0}, {5, 5});
  CHECK_THROWS_AS(refine_tridiagonal(assemble_operator(ElectromagneticField::from_strings(2, "0"),
                                                       square, Scheme::expanded),
                                     0.0),
                  std::invalid_argument);
}

TEST_CASE("truncation study on a fixed domain has zero drift") {
  const auto f = ElectromagneticField::from_strings(1, "x1^2");
  TruncationOptions o;
  o.h = 0.05;
  const auto s = truncation_study(f, {5.0, 5.0, 5.0}, {1.0}, cert_of(1.0, 0.0), o);
  REQUIRE(s.traces.size() == 1);
  for (double d : s.traces[0].drifts) CHECK(d == 0.0);
  CHECK_FALSE(s.traces[0].fit_valid);
  CHECK_FALSE(s.pass());
}

TEST_CASE("harmonic oscillator truncation drifts decay at the Agmon rate") {
  const auto f = ElectromagneticField::from_strings(1, "x1^2");
  const Grid g = Grid::symmetric(1, 10.0, 0.02);
  const Certificate cert = certify(f, g, default_gamma1_ladder(), 10.0);
  TruncationOptions o;
  o.h = 0.02;
  o.reference_radius = 10.0;
  const auto s = truncation_study(f, {5.0, 6.0, 7.0, 8.0}, {1.0}, cert, o);
  REQUIRE(s.traces.size() == 1);
  const auto& t = s.traces[0];
  CHECK(s.multiprecision);
  CHECK(t.reliable);
  CHECK(t.admissible);
  CHECK(t.decreasing);
  CHECK(t.fit_valid);
  MESSAGE("slope " << t.slope << " drifts " << t.drifts[0] << " " << t.drifts[3]);
  CHECK(t.slope <= -s.rate);
  CHECK(s.pass());
  for (double d : t.drifts) CHECK(d > 0.0);

  std::ostringstream os;
  write_truncation_csv(os, s);
  CHECK(os.str().rfind("trace,R,re_lambda,im_lambda,drift,d_ag\n", 0) == 0);

  CHECK_THROWS_AS(truncation_study(f, {5.0, 6.0}, {1.0}, cert, o), std::invalid_argument);
  CHECK_THROWS_AS(truncation_study(f, {5.0, 6.01, 7.0}, {1.0}, cert, o), std::invalid_argument);
  CHECK_THROWS_AS(truncation_study(f, {7.0, 6.0, 5.0}, {1.0}, cert, o), std::invalid_argument);
}
