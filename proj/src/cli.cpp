#include "nonacc/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "nonacc/agmon.hpp"
#include "nonacc/config.hpp"
#include "nonacc/enclosure.hpp"
#include "nonacc/forms.hpp"
#include "nonacc/parallel.hpp"

namespace nonacc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Check {
  std::string name;
  bool pass;
};

struct Outcome {
  json result = json::object();
  std::vector<Check> checks;
  json timings = json::object();
};

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

json to_json(Complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

json to_json(const Certificate& c) {
  return json{{"valid", c.valid},
              {"status", c.status},
              {"gamma1", c.gamma1},
              {"gamma2", c.gamma2},
              {"gamma2_cap", c.gamma2_cap},
              {"grid", {{"lower", c.lower}, {"upper", c.upper}, {"n", c.n}, {"h", c.h}}},
              {"worst_point", c.worst_point},
              {"min_margin", c.min_margin},
              {"median_margin", c.median_margin},
              {"margin_histogram", {{"edges", c.margin_edges}, {"counts", c.margin_counts}}},
              {"ladder", {{"gamma1", c.ladder_gamma1}, {"gamma2", c.ladder_gamma2}}},
              {"refined", {{"min_margin", c.refined_min_margin}, {"gamma2", c.refined_gamma2}, {"margin_drop", c.margin_drop}}}};
}

json to_json(const DecayReport& d) {
  json j{{"verdict", d.verdict},         {"rate", d.rate},   {"weighted_norm", d.weighted_norm},
         {"norm_ratio", d.norm_ratio},   {"stable", d.stable}, {"slope", d.slope},
         {"slope_tol", d.slope_tol},     {"window_size", d.window_size}, {"vacuous", d.vacuous}};
  j["enlarged_weighted_norm"] = d.enlarged_weighted_norm ? json(*d.enlarged_weighted_norm) : json(nullptr);
  return j;
}

json box_json(const Grid& g) {
  json lo = json::array(), hi = json::array(), n = json::array();
  for (int a = 0; a < g.dim(); ++a) {
    lo.push_back(g.lower(a));
    hi.push_back(g.upper(a));
    n.push_back(g.n(a));
  }
  return json{{"lower", lo}, {"upper", hi}, {"n", n}};
}

Certificate certificate_for(const ProblemConfig& cfg, const ElectromagneticField& field, const Grid& grid) {
  return certify(field, grid, cfg.gamma1_ladder.empty() ? default_gamma1_ladder() : cfg.gamma1_ladder, cfg.gamma2_cap);
}

// Box grown by whole cells on every side so the lattice is preserved.
Grid enlarged_grid(const Grid& g, double factor) {
  std::vector<double> lo, hi;
  std::vector<int> n;
  for (int a = 0; a < g.dim(); ++a) {
    const int extra = static_cast<int>(std::lround(0.5 * g.width(a) * (factor - 1.0) / g.h(a)));
    lo.push_back(g.lower(a) - extra * g.h(a));
    hi.push_back(g.upper(a) + extra * g.h(a));
    n.push_back(g.n(a) + 2 * extra);
  }
  return Grid(lo, hi, n);
}

// Nested refinement: every old node is kept and the spacing halves.
Grid halved_grid(const Grid& g) {
  std::vector<double> lo, hi;
  std::vector<int> n;
  for (int a = 0; a < g.dim(); ++a) {
    lo.push_back(g.lower(a));
    hi.push_back(g.upper(a));
    n.push_back(2 * g.n(a) + 1);
  }
  return Grid(lo, hi, n);
}

double default_vinf_radius(const Grid& g) {
  double r2 = 0.0;
  for (int a = 0; a < g.dim(); ++a) r2 += std::pow(std::max(std::abs(g.lower(a)), std::abs(g.upper(a))), 2);
  return 0.5 * std::sqrt(r2);
}

ArnoldiOptions arnoldi_options(const ProblemConfig& cfg, std::uint64_t seed) {
  ArnoldiOptions o;
  o.k = cfg.k;
  o.m = cfg.m;
  o.tol = cfg.tol;
  o.seed = seed;
  return o;
}

struct SpectrumRun {
  Grid grid;
  SparseComplexOperator op;
  Certificate cert;
  std::vector<Eigenpair> pairs;
  std::vector<ProjectorResult> projectors;
  std::vector<Complex> refined;  // Richardson values when enabled
  std::string factorization;
};

SpectrumRun compute_spectrum(const ProblemConfig& cfg, const ElectromagneticField& field, std::uint64_t seed, int jobs,
                             bool richardson) {
  const Grid grid = cfg.grid();
  SpectrumRun run{grid, assemble_operator(field, grid, cfg.resolved_scheme()), certificate_for(cfg, field, grid), {}, {}, {}, {}};
  const std::vector<Complex> shifts = cfg.shifts.empty() ? std::vector<Complex>{0.0} : cfg.shifts;
  std::vector<std::vector<Eigenpair>> found(shifts.size());
  parallel_for(static_cast<int>(shifts.size()), jobs, [&](int i) {
    found[static_cast<std::size_t>(i)] = shift_invert_arnoldi(run.op, shifts[static_cast<std::size_t>(i)], arnoldi_options(cfg, seed)).pairs;
  });
  run.factorization = ShiftedSolver::method_for(run.op);
  for (const auto& batch : found) {
    for (const auto& p : batch) {
      const bool seen = std::any_of(run.pairs.begin(), run.pairs.end(), [&](const Eigenpair& q) {
        return std::abs(q.lambda - p.lambda) <= 1e-8 * (1.0 + std::abs(p.lambda));
      });
      if (!seen) run.pairs.push_back(p);
    }
  }
  std::sort(run.pairs.begin(), run.pairs.end(), [](const Eigenpair& a, const Eigenpair& b) {
    return a.lambda.real() != b.lambda.real() ? a.lambda.real() < b.lambda.real() : a.lambda.imag() < b.lambda.imag();
  });
  std::vector<Complex> all;
  for (const auto& p : run.pairs) all.push_back(p.lambda);
  run.projectors = assign_multiplicities(run.op, run.pairs, all, cfg.quadrature_points, 4, seed);
  if (richardson) {
    const Grid fine = halved_grid(grid);
    const SparseComplexOperator op_fine = assemble_operator(field, fine, cfg.resolved_scheme());
    run.refined.resize(run.pairs.size());
    parallel_for(static_cast<int>(run.pairs.size()), jobs, [&](int i) {
      ArnoldiOptions o = arnoldi_options(cfg, seed);
      o.k = 1;
      const Complex coarse = run.pairs[static_cast<std::size_t>(i)].lambda;
      const auto r = shift_invert_arnoldi(op_fine, coarse, o);
      if (r.pairs.empty()) throw ConvergenceError("Richardson step found no eigenvalue near the coarse one");
      run.refined[static_cast<std::size_t>(i)] = (4.0 * r.pairs[0].lambda - coarse) / 3.0;
    });
  }
  return run;
}

Outcome run_check(const ProblemConfig& cfg, std::uint64_t, int) {
  Outcome out;
  Stopwatch sw;
  const auto field = cfg.field();
  const Grid grid = cfg.grid();
  const Certificate cert = certificate_for(cfg, field, grid);
  out.timings["certificate"] = sw.lap();
  std::vector<double> radii = cfg.asymptotic_radii;
  if (radii.empty()) {
    const double R = default_vinf_radius(grid) * 2.0;
    radii = {0.125 * R, 0.25 * R, 0.5 * R, R};
  }
  const AsymptoticReport asym = diagnose_asymptotics(field, radii, cfg.asymptotic_tol);
  out.timings["asymptotics"] = sw.lap();
  out.result["certificate"] = to_json(cert);
  out.result["asymptotics"] = {{"radii", asym.radii},           {"ratio1", asym.ratio1},
                               {"ratio2", asym.ratio2},         {"tolerance", asym.tolerance},
                               {"ratio1_pass", asym.ratio1_pass}, {"ratio2_pass", asym.ratio2_pass},
                               {"pass", asym.pass}};
  out.checks.push_back({"certificate", cert.valid});
  out.checks.push_back({"asymptotics", asym.pass});
  return out;
}

Outcome run_spectrum(const ProblemConfig& cfg, std::uint64_t seed, int jobs, const fs::path& dir) {
  Outcome out;
  Stopwatch sw;
  const auto field = cfg.field();
  const SpectrumRun run = compute_spectrum(cfg, field, seed, jobs, cfg.richardson);
  out.timings["solve"] = sw.lap();
  const double vinf = estimate_vinf(field, run.grid, cfg.vinf_radius.value_or(default_vinf_radius(run.grid)));

  std::vector<bool> keep;
  json rows = json::array();
  std::ofstream csv(dir / "eigenvalues.csv");
  csv << "index,re,im,residual,multiplicity,region,decay,admissible\n" << std::setprecision(17);
  for (std::size_t i = 0; i < run.pairs.size(); ++i) {
    const Eigenpair& p = run.pairs[i];
    const Complex lam = cfg.richardson ? run.refined[i] : p.lambda;
    std::string decay = "not_checked";
    bool adm = true;
    if (run.cert.valid) {
      const AgmonProfile prof = agmon_distance(field, run.grid, p.lambda, run.cert);
      DecayOptions dopt;
      dopt.epsilon = cfg.epsilon;
      const DecayReport d = certify_decay(prof, p.vector, dopt);
      decay = d.verdict;
      adm = admissible(run.grid, p.vector, &d);
    }
    keep.push_back(adm);
    const RegionTag tag = classify(lam, run.cert, vinf);
    const ProjectorResult& pr = run.projectors[i];
    json row{{"lambda", to_json(lam)},
             {"residual", p.residual},
             {"multiplicity", p.multiplicity},
             {"region", to_string(tag)},
             {"decay", decay},
             {"admissible", adm},
             {"projector",
              {{"radius", pr.radius},
               {"trace", to_json(pr.trace)},
               {"trace_defect", pr.trace_defect},
               {"idempotency_defect", pr.idempotency_defect},
               {"quadrature_change", pr.quadrature_change}}}};
    if (cfg.richardson) row["lambda_grid"] = to_json(p.lambda);
    rows.push_back(row);
    csv << i << ',' << lam.real() << ',' << lam.imag() << ',' << p.residual << ',' << p.multiplicity << ','
        << to_string(tag) << ',' << decay << ',' << (adm ? 1 : 0) << '\n';
  }
  out.timings["diagnostics"] = sw.lap();
  out.result["certificate"] = to_json(run.cert);
  out.result["scheme"] = to_string(cfg.resolved_scheme());
  out.result["factorization"] = run.factorization;
  out.result["richardson"] = cfg.richardson;
  out.result["vinf"] = {{"radius", cfg.vinf_radius.value_or(default_vinf_radius(run.grid))}, {"estimate", vinf}};
  out.result["eigenvalues"] = rows;

  bool residuals_ok = true;
  for (const auto& p : run.pairs) residuals_ok = residuals_ok && p.residual <= cfg.tol;
  out.checks.push_back({"residuals", residuals_ok && !run.pairs.empty()});
  if (run.cert.valid) {
    std::vector<Eigenpair> placed = run.pairs;
    if (cfg.richardson) {
      for (std::size_t i = 0; i < placed.size(); ++i) placed[i].lambda = run.refined[i];
    }
    const PlacementReport rep = placement_check(placed, run.cert, keep);
    json entries = json::array();
    for (const auto& e : rep.entries) {
      entries.push_back({{"lambda", to_json(e.lambda)}, {"value", e.value}, {"admissible", e.admissible}, {"pass", e.pass}});
    }
    out.result["placement"] = {{"gamma2", rep.gamma2}, {"violations", rep.violations}, {"entries", entries}};
    out.checks.push_back({"placement", rep.pass()});
  }
  if (!cfg.expected.empty()) {
    json matches = json::array();
    bool all = true;
    for (double e : cfg.expected) {
      double best = std::numeric_limits<double>::infinity();
      Complex at = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t i = 0; i < run.pairs.size(); ++i) {
        const Complex lam = cfg.richardson ? run.refined[i] : run.pairs[i].lambda;
        if (std::abs(lam - e) < best) {
          best = std::abs(lam - e);
          at = lam;
        }
      }
      const bool ok = best <= cfg.expected_atol + cfg.expected_rtol * std::abs(e);
      all = all && ok;
      matches.push_back({{"expected", e}, {"lambda", to_json(at)}, {"error", best}, {"pass", ok}});
    }
    out.result["expected"] = matches;
    out.checks.push_back({"expected", all});
  }
  return out;
}

Outcome run_agmon(const ProblemConfig& cfg, std::uint64_t seed, int jobs, const fs::path& dir) {
  Outcome out;
  Stopwatch sw;
  const auto field = cfg.field();
  const SpectrumRun run = compute_spectrum(cfg, field, seed, jobs, false);
  if (!run.cert.valid) throw std::runtime_error("no certificate under the gamma2 cap; Agmon weights are undefined");
  const Grid big = enlarged_grid(run.grid, cfg.enlarge);
  const SparseComplexOperator op_big = assemble_operator(field, big, cfg.resolved_scheme());
  out.timings["solve"] = sw.lap();

  std::optional<int> base, base_big;
  if (cfg.x0) {
    base = run.grid.nearest(*cfg.x0);
    base_big = big.nearest(*cfg.x0);
  }
  DecayOptions dopt;
  dopt.epsilon = cfg.epsilon;
  json rows = json::array();
  std::vector<json> slots(run.pairs.size());
  std::vector<std::string> verdicts(run.pairs.size());
  parallel_for(static_cast<int>(run.pairs.size()), jobs, [&](int i) {
    const Eigenpair& p = run.pairs[static_cast<std::size_t>(i)];
    ArnoldiOptions o = arnoldi_options(cfg, seed);
    o.k = 1;
    const auto rb = shift_invert_arnoldi(op_big, p.lambda, o);
    if (rb.pairs.empty()) throw ConvergenceError("no eigenvalue found on the enlarged box");
    const AgmonProfile prof = agmon_distance(field, run.grid, p.lambda, run.cert, base);
    const AgmonProfile prof_big = agmon_distance(field, big, p.lambda, run.cert, base_big);
    const DecayReport d = certify_decay(prof, p.vector, dopt, &prof_big, &rb.pairs[0].vector);
    json row{{"lambda", to_json(p.lambda)},
             {"multiplicity", p.multiplicity},
             {"enlarged_lambda", to_json(rb.pairs[0].lambda)},
             {"base_point", prof.base_point},
             {"max_distance", prof.distance.maxCoeff()},
             {"decay", to_json(d)},
             {"csv", "agmon_" + std::to_string(i) + ".csv"}};
    std::string verdict = d.verdict;
    if (p.multiplicity > 1) {
      const ProjectorResult& pr = run.projectors[static_cast<std::size_t>(i)];
      Eigen::MatrixXcd probe(big.size(), 5);
      probe.col(0) = rb.pairs[0].vector;
      for (int c = 1; c < 5; ++c) probe.col(c) = random_vector(big.size(), seed + 1000 * static_cast<std::uint64_t>(i) + c);
      const ProjectorResult pr_big = riesz_projector(op_big, p.lambda, pr.radius, cfg.quadrature_points, probe);
      json gen = json::array();
      for (const auto& g : certify_generalized(prof, pr.range, dopt, &prof_big, &pr_big.range)) {
        gen.push_back(to_json(g));
        if (g.verdict == "fail") verdict = "fail";
      }
      row["generalized"] = gen;
    }
    std::ofstream csv(dir / ("agmon_" + std::to_string(i) + ".csv"));
    write_profile_csv(csv, prof, p.vector);
    slots[static_cast<std::size_t>(i)] = row;
    verdicts[static_cast<std::size_t>(i)] = verdict;
  });
  for (auto& s : slots) rows.push_back(std::move(s));
  out.timings["decay"] = sw.lap();
  out.result["certificate"] = to_json(run.cert);
  out.result["epsilon"] = cfg.epsilon;
  out.result["enlarged_box"] = box_json(big);
  out.result["eigenfunctions"] = rows;
  bool ok = !run.pairs.empty();
  for (const auto& v : verdicts) ok = ok && v != "fail";
  out.checks.push_back({"decay", ok});
  return out;
}

Outcome run_truncate(const ProblemConfig& cfg, std::uint64_t seed, int jobs, const fs::path& dir) {
  Outcome out;
  Stopwatch sw;
  if (cfg.radii.empty()) throw ConfigError(0, "truncate needs [truncation] radii");
  if (cfg.shifts.empty()) throw ConfigError(0, "truncate needs [solver] shifts");
  const auto field = cfg.field();
  const Grid grid = cfg.grid();
  const Certificate cert = certificate_for(cfg, field, grid);
  if (!cert.valid) throw std::runtime_error("no certificate under the gamma2 cap; Agmon distances are undefined");
  TruncationOptions o;
  o.h = cfg.truncation_h.value_or(grid.max_h());
  o.reference_radius = cfg.reference_radius;
  o.epsilon = cfg.epsilon;
  o.scheme = cfg.resolved_scheme();
  o.tol = std::min(cfg.tol, 1e-10);
  o.jobs = jobs;
  o.seed = seed;
  const TruncationStudy s = truncation_study(field, cfg.radii, cfg.shifts, cert, o);
  out.timings["study"] = sw.lap();
  json traces = json::array();
  for (const auto& t : s.traces) {
    json lam = json::array();
    for (const auto& z : t.lambdas) lam.push_back(to_json(z));
    traces.push_back({{"reference", to_json(t.reference)},
                      {"lambdas", lam},
                      {"drifts", t.drifts},
                      {"d_ag", t.d_ag},
                      {"reliable", t.reliable},
                      {"admissible", t.admissible},
                      {"decreasing", t.decreasing},
                      {"fit_valid", t.fit_valid},
                      {"slope", t.slope},
                      {"intercept", t.intercept},
                      {"pass", t.pass}});
  }
  out.result["certificate"] = to_json(cert);
  out.result["truncation"] = {{"radii", s.radii},   {"reference_radius", s.reference_radius},
                              {"h", s.h},           {"epsilon", s.epsilon},
                              {"rate", s.rate},     {"multiprecision", s.multiprecision},
                              {"traces", traces},   {"csv", "truncation.csv"}};
  std::ofstream csv(dir / "truncation.csv");
  write_truncation_csv(csv, s);
  out.checks.push_back({"truncation", s.pass()});
  return out;
}

Complex sample_mu(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const double re = u(rng);
  return {re, u(rng)};
}

Outcome run_verify(const ProblemConfig& cfg, std::uint64_t seed, int jobs, const fs::path& dir) {
  Outcome out;
  Stopwatch sw;
  const auto field = cfg.field();
  const Grid grid = cfg.grid();
  const Certificate cert = certificate_for(cfg, field, grid);
  const FormContext ctx(field, grid, cfg.kappa);

  const WeightFunction zero = WeightFunction::zero(grid);
  const WeightFunction ramp = WeightFunction::from_function(grid, [](const std::vector<double>& x) {
    return std::min(std::max(x[0], 0.0), 1.0);
  });
  std::optional<WeightFunction> agmon_w;
  if (cert.valid) {
    const Complex lam = cfg.shifts.empty() ? Complex(0.0) : cfg.shifts[0];
    const AgmonProfile prof = agmon_distance(field, grid, lam, cert);
    const double cut = prof.distance.maxCoeff() / 4.0;
    const double eta = (1.0 - cfg.epsilon) / 3.0;
    agmon_w = WeightFunction(grid, eta * prof.distance.cwiseMin(cut));
  }
  LemmaParams loc;
  {
    double s = std::numeric_limits<double>::infinity();
    for (int a = 0; a < grid.dim(); ++a) s = std::min(s, grid.width(a) / 8.0);
    loc.chi = Eigen::VectorXd(grid.size());
    std::vector<double> x;
    for (int k = 0; k < grid.size(); ++k) {
      grid.point(k, x);
      double r2 = 0.0;
      for (int a = 0; a < grid.dim(); ++a) r2 += std::pow(x[static_cast<std::size_t>(a)] - 0.5 * (grid.lower(a) + grid.upper(a)), 2);
      loc.chi(k) = std::exp(-r2 / (2.0 * s * s));
    }
  }
  out.timings["setup"] = sw.lap();

  std::vector<std::vector<json>> records(static_cast<std::size_t>(cfg.samples));
  parallel_for(cfg.samples, jobs, [&](int i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const Eigen::VectorXcd u = random_compact_support(grid, cfg.margin, s).values;
    const Complex mu = sample_mu(s);
    auto& rec = records[static_cast<std::size_t>(i)];
    auto add = [&](const std::string& id, const InequalityGap& g) {
      json r{{"id", id}, {"seed", s}, {"gap", g.gap}, {"tol", g.tol}, {"pass", g.pass()}};
      if (id == "B2") r["constant"] = g.constant;
      rec.push_back(std::move(r));
    };
    add("coercivity.W0", coercivity_gap(ctx, u, mu, zero));
    add("coercivity.ramp", coercivity_gap(ctx, u, mu, ramp));
    if (agmon_w) {
      add("coercivity.agmon", coercivity_gap(ctx, u, mu, *agmon_w));
      add("coercivity.certified", certified_coercivity_gap(ctx, u, mu, cert));
    }
    add("BmBV", lemma_gap(ctx, Lemma::BmBV, u));
    add("loc", lemma_gap(ctx, Lemma::loc, u, loc));
    for (double delta : {0.1, 1.0, 10.0}) {
      LemmaParams p;
      p.delta = delta;
      std::ostringstream id;
      id << "nablaA.delta=" << delta;
      add(id.str(), lemma_gap(ctx, Lemma::nablaA, u, p));
    }
    add("B2", lemma_gap(ctx, Lemma::B2, u));
  });
  out.timings["inequalities"] = sw.lap();

  std::ofstream jsonl(dir / "verify.jsonl");
  std::map<std::string, json> summary;
  int violations = 0;
  for (const auto& batch : records) {
    for (const auto& r : batch) {
      jsonl << r.dump() << '\n';
      json& s = summary[r["id"].get<std::string>()];
      if (s.is_null()) s = {{"count", 0}, {"violations", 0}, {"min_gap", r["gap"]}, {"min_gap_over_tol", nullptr}};
      s["count"] = s["count"].get<int>() + 1;
      s["min_gap"] = std::min(s["min_gap"].get<double>(), r["gap"].get<double>());
      if (r["tol"].get<double>() > 0.0) {
        const double q = r["gap"].get<double>() / r["tol"].get<double>();
        s["min_gap_over_tol"] = s["min_gap_over_tol"].is_null() ? q : std::min(s["min_gap_over_tol"].get<double>(), q);
      }
      if (r.contains("constant")) {
        s["max_constant"] = s.contains("max_constant") ? std::max(s["max_constant"].get<double>(), r["constant"].get<double>())
                                                       : r["constant"].get<double>();
      }
      if (!r["pass"].get<bool>()) {
        s["violations"] = s["violations"].get<int>() + 1;
        ++violations;
      }
    }
  }
  out.result["certificate"] = to_json(cert);
  out.result["samples"] = cfg.samples;
  out.result["kappa"] = cfg.kappa;
  out.result["records"] = "verify.jsonl";
  out.result["summary"] = summary;
  out.result["violations"] = violations;
  out.checks.push_back({"inequalities", violations == 0});
  return out;
}

Outcome run_probe(const ProblemConfig& cfg, std::uint64_t seed, int jobs, const fs::path& dir) {
  Outcome out;
  Stopwatch sw;
  const auto field = cfg.field();
  const Grid grid = cfg.grid();
  const Certificate cert = certificate_for(cfg, field, grid);
  if (!cert.valid) throw std::runtime_error("no certificate under the gamma2 cap; rho_gamma2 is undefined");
  const auto op = assemble_operator(field, grid, cfg.resolved_scheme());
  const int count = cfg.probes;
  std::vector<ResolventProbe> probes(static_cast<std::size_t>(count));
  std::vector<double> gaps(static_cast<std::size_t>(count));
  const double slopes[] = {0.0, 0.5, -0.5, 1.0, -1.0};
  parallel_for(count, jobs, [&](int i) {
    const double t = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    const double g = cfg.gap_min * std::pow(cfg.gap_max / cfg.gap_min, t);
    const double im = g * slopes[i % 5];
    const Complex mu(-cert.gamma2 - g - std::abs(im), im);
    gaps[static_cast<std::size_t>(i)] = g;
    probes[static_cast<std::size_t>(i)] = resolvent_probe(op, mu, cfg.probe_iterations, seed + static_cast<std::uint64_t>(i));
  });
  out.timings["probes"] = sw.lap();
  std::ofstream csv(dir / "probes.csv");
  csv << "index,re_mu,im_mu,gap,estimate,bound,pass\n" << std::setprecision(17);
  json rows = json::array();
  int violations = 0;
  for (int i = 0; i < count; ++i) {
    const auto& p = probes[static_cast<std::size_t>(i)];
    const double g = gaps[static_cast<std::size_t>(i)];
    const double bound = resolvent_bound(g, grid.max_h());
    const bool ok = p.norm_estimate <= bound;
    violations += ok ? 0 : 1;
    rows.push_back({{"mu", to_json(p.mu)},
                    {"gap", g},
                    {"estimate", p.norm_estimate},
                    {"bound", bound},
                    {"solve_residual", p.solve_residual},
                    {"iterations", p.iterations},
                    {"pass", ok}});
    csv << i << ',' << p.mu.real() << ',' << p.mu.imag() << ',' << g << ',' << p.norm_estimate << ',' << bound << ','
        << (ok ? 1 : 0) << '\n';
  }
  out.result["certificate"] = to_json(cert);
  out.result["factorization"] = ShiftedSolver::method_for(op);
  out.result["probes"] = rows;
  out.result["violations"] = violations;
  out.checks.push_back({"resolvent_bound", violations == 0});
  return out;
}

}  // namespace

int run(const RunOptions& opts, std::ostream& err) {
  try {
    if (std::find(subcommands().begin(), subcommands().end(), opts.subcommand) == subcommands().end()) {
      throw std::invalid_argument("unknown subcommand '" + opts.subcommand + "'");
    }
    Stopwatch total;
    const ProblemConfig cfg = load_config(opts.config_path);
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    const int jobs = std::max(1, opts.jobs);
    const fs::path dir(opts.out_dir);
    fs::create_directories(dir);

    Outcome out;
    const std::string& sub = opts.subcommand;
    if (sub == "check") out = run_check(cfg, seed, jobs);
    else if (sub == "spectrum") out = run_spectrum(cfg, seed, jobs, dir);
    else if (sub == "agmon") out = run_agmon(cfg, seed, jobs, dir);
    else if (sub == "truncate") out = run_truncate(cfg, seed, jobs, dir);
    else if (sub == "verify") out = run_verify(cfg, seed, jobs, dir);
    else out = run_probe(cfg, seed, jobs, dir);

    json config = json::object();
    for (const auto& [section, keys] : cfg.sections) {
      for (const auto& [key, value] : keys) config[section][key] = value.text;
    }
    bool pass = true;
    json checks = json::array();
    for (const auto& c : out.checks) {
      checks.push_back({{"name", c.name}, {"pass", c.pass}});
      pass = pass && c.pass;
    }
    out.timings["total"] = total.lap();
    out.timings["jobs"] = jobs;
    const json report{{"schema_version", kSchemaVersion},
                      {"tool", "nonacc"},
                      {"subcommand", sub},
                      {"config", config},
                      {"config_hash", "fnv1a64:" + hex(cfg.hash())},
                      {"seed", seed},
                      {"status", pass ? "pass" : "fail"},
                      {"checks", checks},
                      {"result", out.result},
                      {"timings", out.timings}};
    std::ofstream(dir / "report.json") << report.dump(2) << '\n';
    if (!pass) {
      for (const auto& c : out.checks) {
        if (!c.pass) err << "check failed: " << c.name << '\n';
      }
      return check_failed;
    }
    return ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return operational_error;
  }
}

}  // namespace nonacc::cli
