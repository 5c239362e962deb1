#include "nonacc/enclosure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include <boost/multiprecision/cpp_complex.hpp>

#include "nonacc/parallel.hpp"

namespace nonacc {

namespace {

using Precise = boost::multiprecision::cpp_complex<200>;
using PreciseReal = Precise::value_type;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Precise to_precise(const PreciseEigenvalue& p) { return Precise(PreciseReal(p.re), PreciseReal(p.im)); }

bool is_lattice_multiple(double R, double h) {
  const double q = R / h;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

struct RadiusSolve {
  Grid grid;
  SparseComplexOperator op;
  std::vector<Eigenpair> candidates;
};

void add_candidates(std::vector<Eigenpair>& out, const std::vector<Eigenpair>& pairs) {
  for (const auto& p : pairs) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Eigenpair& q) {
      return std::abs(q.lambda - p.lambda) <= 1e-8 * (1.0 + std::abs(p.lambda));
    });
    if (!seen) out.push_back(p);
  }
}

RadiusSolve solve_radius(const ElectromagneticField& field, double R, const std::vector<Complex>& shifts,
                         const TruncationOptions& opts) {
  const Grid grid = Grid::symmetric(field.dim(), R, opts.h);
  RadiusSolve s{grid, assemble_operator(field, grid, opts.scheme), {}};
  ArnoldiOptions ao;
  ao.k = std::min(opts.eigenvalues_per_shift, s.op.size());
  ao.tol = opts.tol;
  ao.seed = opts.seed;
  for (const Complex& shift : shifts) add_candidates(s.candidates, shift_invert_arnoldi(s.op, shift, ao).pairs);
  return s;
}

double boundary_agmon_distance(const AgmonProfile& profile, double R) {
  if (profile.grid.dim() == 1) return std::min(distance_at(profile, {-R}), distance_at(profile, {R}));
  const double h = profile.grid.h(0);
  const int steps = static_cast<int>(std::round(2.0 * R / h));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const double t = -R + 2.0 * R * i / steps;
    for (double side : {-R, R}) {
      best = std::min({best, distance_at(profile, {t, side}), distance_at(profile, {side, t})});
    }
  }
  return best;
}

}  // namespace

std::string to_string(RegionTag tag) {
  switch (tag) {
    case RegionTag::resolvent: return "resolvent_set";
    case RegionTag::fredholm_window: return "fredholm_window";
    case RegionTag::outside: return "outside";
  }
  return "outside";
}

RegionTag classify(Complex mu, const Certificate& cert, double vinf) {
  const FredholmWindow w{cert.gamma1, cert.gamma2, vinf};
  if (w.resolvent_region().contains(mu)) return RegionTag::resolvent;
  if (vinf > 0.0 && w.region().contains(mu)) return RegionTag::fredholm_window;
  return RegionTag::outside;
}

double estimate_vinf(const ElectromagneticField& field, const Grid& grid, double R, int samples) {
  if (samples < 2) throw std::invalid_argument("estimate_vinf needs at least two samples");
  double best = std::numeric_limits<double>::infinity();
  auto visit = [&](const std::vector<double>& x) {
    double r2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double xa = x[static_cast<std::size_t>(a)];
      if (xa < grid.lower(a) || xa > grid.upper(a)) return;
      r2 += xa * xa;
    }
    if (std::sqrt(r2) < R * (1.0 - 1e-14)) return;
    best = std::min(best, std::abs(field.potential(x)));
  };
  if (grid.dim() == 1) {
    const double a = grid.lower(0), b = grid.upper(0);
    for (const auto& [lo, hi] : {std::pair{std::max(R, a), b}, std::pair{a, std::min(-R, b)}}) {
      if (lo > hi) continue;
      for (int i = 0; i < samples; ++i) visit({lo + (hi - lo) * i / (samples - 1)});
    }
  } else {
    const double rmax = std::hypot(std::max(-grid.lower(0), grid.upper(0)), std::max(-grid.lower(1), grid.upper(1)));
    const int radial = std::max(2, samples / 4);
    for (int i = 0; i < radial && R <= rmax; ++i) {
      const double r = R + (rmax - R) * i / (radial - 1);
      for (int j = 0; j < samples; ++j) {
        const double t = 2.0 * M_PI * j / samples;
        visit({r * std::cos(t), r * std::sin(t)});
      }
    }
    for (double x : {grid.lower(0), grid.upper(0)}) {
      for (double y : {grid.lower(1), grid.upper(1)}) visit({x, y});
    }
  }
  if (!std::isfinite(best)) throw std::invalid_argument("the shell |x| >= R does not meet the box");
  return best;
}

PlacementReport placement_check(const std::vector<Eigenpair>& pairs, const Certificate& cert,
                                const std::vector<bool>& admissible_flags) {
  if (!admissible_flags.empty() && admissible_flags.size() != pairs.size()) {
    throw std::invalid_argument("one admissibility flag per eigenpair expected");
  }
  PlacementReport rep;
  rep.gamma2 = cert.gamma2;
  const EnclosureRegion rho{cert.gamma2};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PlacementEntry e;
    e.lambda = pairs[i].lambda;
    e.value = rho.value(e.lambda);
    e.admissible = admissible_flags.empty() || admissible_flags[i];
    e.pass = !e.admissible || e.value <= 0.0;
    if (!e.pass) ++rep.violations;
    rep.entries.push_back(e);
  }
  return rep;
}

double boundary_mass(const Grid& grid, const Eigen::VectorXcd& psi, double fraction) {
  if (psi.size() != grid.size()) throw GridMismatch("vector length does not match the grid");
  double near = 0.0;
  const double total = psi.squaredNorm();
  if (!(total > 0.0)) return 0.0;
  std::vector<double> x;
  for (int k = 0; k < grid.size(); ++k) {
    grid.point(k, x);
    bool close = false;
    for (int a = 0; a < grid.dim(); ++a) {
      const double band = fraction * grid.width(a);
      const double xa = x[static_cast<std::size_t>(a)];
      close = close || xa - grid.lower(a) < band || grid.upper(a) - xa < band;
    }
    if (close) near += std::norm(psi(k));
  }
  return near / total;
}

bool admissible(const Grid& grid, const Eigen::VectorXcd& psi, const DecayReport* decay) {
  if (decay && decay->pass()) return true;
  return boundary_mass(grid, psi) < 0.01;
}

double resolvent_bound(double gap, double h) { return 2.0 / gap * (1.0 + 1e-3) + 10.0 * h * h; }

PreciseEigenvalue refine_tridiagonal(const SparseComplexOperator& op, Complex guess) {
  if (op.lower_bandwidth() > 1 || op.upper_bandwidth() > 1) {
    throw std::invalid_argument("refine_tridiagonal needs a tridiagonal operator");
  }
  const auto& M = op.matrix();
  const int n = op.size();
  std::vector<Precise> d(static_cast<std::size_t>(n)), lu(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Complex di = M.coeff(i, i);
    d[static_cast<std::size_t>(i)] = Precise(di.real(), di.imag());
    if (i > 0) {
      const Precise l(M.coeff(i, i - 1).real(), M.coeff(i, i - 1).imag());
      const Precise u(M.coeff(i - 1, i).real(), M.coeff(i - 1, i).imag());
      lu[static_cast<std::size_t>(i)] = l * u;
    }
  }
  PreciseEigenvalue out;
  Precise lambda(guess.real(), guess.imag());
  const PreciseReal stop("1e-190");
  for (out.iterations = 1; out.iterations <= 60; ++out.iterations) {
    // ratios r_i = p_i / p_{i-1} of leading principal minors of T - lambda and their derivatives
    Precise r = d[0] - lambda, dr(-1), sum = dr / r;
    for (int i = 1; i < n; ++i) {
      const Precise c = lu[static_cast<std::size_t>(i)] / r;
      const Precise dr_next = Precise(-1) + c * dr / r;
      r = d[static_cast<std::size_t>(i)] - lambda - c;
      dr = dr_next;
      sum += dr / r;
    }
    const Precise step = Precise(1) / sum;
    lambda -= step;
    if (abs(step) <= stop * (1 + abs(lambda))) {
      out.converged = true;
      break;
    }
  }
  out.re = lambda.real().str(0, std::ios_base::scientific);
  out.im = lambda.imag().str(0, std::ios_base::scientific);
  out.value = Complex(lambda.real().convert_to<double>(), lambda.imag().convert_to<double>());
  return out;
}

double precise_distance(const PreciseEigenvalue& a, const PreciseEigenvalue& b) {
  return abs(to_precise(a) - to_precise(b)).convert_to<double>();
}

bool TruncationStudy::pass() const {
  bool any = false;
  for (const auto& t : traces) {
    if (!t.admissible) continue;
    any = true;
    if (!t.pass) return false;
  }
  return any;
}

TruncationStudy truncation_study(const ElectromagneticField& field, const std::vector<double>& radii,
                                 const std::vector<Complex>& shifts, const Certificate& cert,
                                 const TruncationOptions& opts) {
  if (radii.size() < 3) throw std::invalid_argument("a truncation study needs at least three radii");
  if (!std::is_sorted(radii.begin(), radii.end())) throw std::invalid_argument("radii must be nondecreasing");
  if (shifts.empty()) throw std::invalid_argument("a truncation study needs at least one shift");
  const double R_ref = opts.reference_radius.value_or(radii.back());
  if (R_ref < radii.back()) throw std::invalid_argument("the reference radius must be the largest");
  for (double R : radii) {
    if (!is_lattice_multiple(R, opts.h)) throw std::invalid_argument("every radius must be a multiple of h");
  }
  if (!is_lattice_multiple(R_ref, opts.h)) throw std::invalid_argument("every radius must be a multiple of h");

  TruncationStudy study;
  study.radii = radii;
  study.reference_radius = R_ref;
  study.h = opts.h;
  study.epsilon = opts.epsilon;
  study.rate = (1.0 - opts.epsilon) / 3.0;
  study.gamma1 = cert.gamma1;
  study.gamma2 = cert.gamma2;
  study.multiprecision = opts.multiprecision && field.dim() == 1;

  const RadiusSolve ref = solve_radius(field, R_ref, shifts, opts);
  std::vector<Complex> ref_lambdas;
  std::vector<int> trace_of;  // reference candidate index per trace
  for (const Complex& s : shifts) {
    if (ref.candidates.empty()) break;
    const auto it = std::min_element(ref.candidates.begin(), ref.candidates.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.lambda - s) < std::abs(b.lambda - s);
    });
    const int idx = static_cast<int>(it - ref.candidates.begin());
    if (std::find(trace_of.begin(), trace_of.end(), idx) == trace_of.end()) {
      trace_of.push_back(idx);
      ref_lambdas.push_back(it->lambda);
    }
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ref.candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < ref.candidates.size(); ++j) {
      min_gap = std::min(min_gap, std::abs(ref.candidates[i].lambda - ref.candidates[j].lambda));
    }
  }
  const double threshold = 0.5 * min_gap;

  // distinct radii other than the reference are solved independently
  std::vector<double> distinct;
  for (double R : radii) {
    if (std::abs(R - R_ref) > 0.5 * opts.h && (distinct.empty() || std::abs(R - distinct.back()) > 0.5 * opts.h)) {
      distinct.push_back(R);
    }
  }
  std::vector<std::optional<RadiusSolve>> solved(distinct.size());
  parallel_for(static_cast<int>(distinct.size()), opts.jobs,
               [&](int i) { solved[static_cast<std::size_t>(i)] = solve_radius(field, distinct[static_cast<std::size_t>(i)], ref_lambdas, opts); });
  auto solve_for = [&](double R) -> const RadiusSolve& {
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      if (std::abs(distinct[i] - R) <= 0.5 * opts.h) return *solved[i];
    }
    return ref;
  };

  const int T = static_cast<int>(ref_lambdas.size());
  study.traces.resize(static_cast<std::size_t>(T));
  std::vector<PreciseEigenvalue> ref_precise(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    auto& tr = study.traces[static_cast<std::size_t>(t)];
    tr.reference = ref_lambdas[static_cast<std::size_t>(t)];
    const Eigenpair& rp = ref.candidates[static_cast<std::size_t>(trace_of[static_cast<std::size_t>(t)])];
    const AgmonProfile profile = agmon_distance(field, ref.grid, tr.reference, cert);
    DecayOptions dopt;
    dopt.epsilon = opts.epsilon;
    const DecayReport decay = certify_decay(profile, rp.vector, dopt);
    tr.admissible = admissible(ref.grid, rp.vector, &decay);
    for (double R : radii) tr.d_ag.push_back(boundary_agmon_distance(profile, R));
    if (study.multiprecision) {
      ref_precise[static_cast<std::size_t>(t)] = refine_tridiagonal(ref.op, tr.reference);
      if (!ref_precise[static_cast<std::size_t>(t)].converged) tr.reliable = false;
    }
  }

  for (double R : radii) {
    const RadiusSolve& s = solve_for(R);
    // greedy matching by distance, one candidate per trace
    std::vector<std::tuple<double, int, int>> order;
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < static_cast<int>(s.candidates.size()); ++c) {
        order.emplace_back(std::abs(s.candidates[static_cast<std::size_t>(c)].lambda - ref_lambdas[static_cast<std::size_t>(t)]), t, c);
      }
    }
    std::sort(order.begin(), order.end());
    std::vector<int> match(static_cast<std::size_t>(T), -1);
    std::vector<char> used(s.candidates.size(), 0);
    for (const auto& [dist, t, c] : order) {
      if (match[static_cast<std::size_t>(t)] >= 0 || used[static_cast<std::size_t>(c)]) continue;
      match[static_cast<std::size_t>(t)] = c;
      used[static_cast<std::size_t>(c)] = 1;
    }
    for (int t = 0; t < T; ++t) {
      auto& tr = study.traces[static_cast<std::size_t>(t)];
      const int c = match[static_cast<std::size_t>(t)];
      if (c < 0) {
        tr.reliable = false;
        tr.lambdas.emplace_back(kNaN, kNaN);
        tr.drifts.push_back(kNaN);
        continue;
      }
      const Complex lam = s.candidates[static_cast<std::size_t>(c)].lambda;
      if (std::abs(lam - tr.reference) > threshold) tr.reliable = false;
      if (&s == &ref) {
        tr.lambdas.push_back(tr.reference);
        tr.drifts.push_back(0.0);
      } else if (study.multiprecision) {
        const PreciseEigenvalue p = refine_tridiagonal(s.op, lam);
        if (!p.converged) tr.reliable = false;
        tr.lambdas.push_back(p.value);
        tr.drifts.push_back(precise_distance(p, ref_precise[static_cast<std::size_t>(t)]));
      } else {
        tr.lambdas.push_back(lam);
        tr.drifts.push_back(std::abs(lam - tr.reference));
      }
    }
  }

  for (auto& tr : study.traces) {
    std::vector<double> xs, ys;
    bool decreasing = true;
    double previous = std::numeric_limits<double>::infinity();
    int studied = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      if (std::abs(radii[k] - R_ref) <= 0.5 * opts.h) continue;
      ++studied;
      const double dk = tr.drifts[k];
      if (!(dk < previous)) decreasing = false;
      previous = dk;
      if (dk > 0.0 && std::isfinite(dk)) {
        xs.push_back(tr.d_ag[k]);
        ys.push_back(std::log(dk));
      }
    }
    tr.decreasing = decreasing && studied >= 2;
    if (xs.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
      }
      mx /= static_cast<double>(xs.size());
      my /= static_cast<double>(xs.size());
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
      }
      if (sxx > 0.0) {
        tr.fit_valid = true;
        tr.slope = sxy / sxx;
        tr.intercept = my - tr.slope * mx;
      }
    }
    tr.pass = tr.reliable && tr.fit_valid && tr.decreasing && tr.slope <= -study.rate;
  }
  return study;
}

void write_truncation_csv(std::ostream& os, const TruncationStudy& study) {
  os << "trace,R,re_lambda,im_lambda,drift,d_ag\n" << std::setprecision(17);
  for (std::size_t t = 0; t < study.traces.size(); ++t) {
    const auto& tr = study.traces[t];
    for (std::size_t k = 0; k < study.radii.size(); ++k) {
      os << t << ',' << study.radii[k] << ',' << tr.lambdas[k].real() << ',' << tr.lambdas[k].imag() << ','
         << tr.drifts[k] << ',' << tr.d_ag[k] << '\n';
    }
  }
}

}  // namespace nonacc
