#include "nonacc/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nonacc {

namespace {

struct NodalData {
  std::vector<double> L;
  std::vector<double> absV;
};

NodalData sample_grid(const ElectromagneticField& field, const Grid& grid) {
  if (field.dim() != grid.dim()) throw std::invalid_argument("field and grid dimensions differ");
  NodalData out;
  out.L.resize(static_cast<std::size_t>(grid.size()));
  out.absV.resize(static_cast<std::size_t>(grid.size()));
  std::vector<double> x;
  for (int k = 0; k < grid.size(); ++k) {
    grid.point(k, x);
    const WeightSample s = sample(field, x);
    out.L[static_cast<std::size_t>(k)] = assumption_lhs(s, field.dim());
    out.absV[static_cast<std::size_t>(k)] = s.abs_V;
  }
  return out;
}

double gamma2_from(const NodalData& data, double gamma1) {
  double g = 0.0;
  for (std::size_t k = 0; k < data.L.size(); ++k) g = std::max(g, gamma1 * data.absV[k] - data.L[k]);
  return g;
}

Grid refined(const Grid& grid) {
  std::vector<double> lo, hi;
  std::vector<int> n;
  for (int a = 0; a < grid.dim(); ++a) {
    lo.push_back(grid.lower(a));
    hi.push_back(grid.upper(a));
    n.push_back(2 * grid.n(a) + 1);  // keeps every coarse node
  }
  return Grid(lo, hi, n);
}

bool trend_pass(const std::vector<double>& r, double tolerance) {
  for (double v : r) {
    if (!std::isfinite(v)) return false;
  }
  const double first = r.front();
  const double last = r.back();
  if (first > 0.0) return last < 0.5 * first && last < tolerance;
  return last < tolerance;
}

}  // namespace

std::vector<double> default_gamma1_ladder() {
  std::vector<double> out;
  for (int k = 0; k <= 8; ++k) out.push_back(std::ldexp(1.0, k) / 16.0);
  return out;
}

double gamma2_for(const ElectromagneticField& field, const Grid& grid, double gamma1) {
  return gamma2_from(sample_grid(field, grid), gamma1);
}

Certificate certify(const ElectromagneticField& field, const Grid& grid,
                    const std::vector<double>& gamma1_candidates, double gamma2_cap) {
  if (gamma1_candidates.empty()) throw std::invalid_argument("no gamma1 candidates");
  if (!std::is_sorted(gamma1_candidates.begin(), gamma1_candidates.end())) {
    throw std::invalid_argument("gamma1 candidates must be sorted ascending");
  }
  for (double g : gamma1_candidates) {
    if (!(g > 0.0)) throw std::invalid_argument("gamma1 candidates must be positive");
  }

  const NodalData data = sample_grid(field, grid);
  Certificate cert;
  cert.gamma2_cap = gamma2_cap;
  for (int a = 0; a < grid.dim(); ++a) {
    cert.lower.push_back(grid.lower(a));
    cert.upper.push_back(grid.upper(a));
    cert.n.push_back(grid.n(a));
  }
  cert.h = grid.max_h();

  int chosen = -1;
  for (std::size_t c = 0; c < gamma1_candidates.size(); ++c) {
    const double g2 = gamma2_from(data, gamma1_candidates[c]);
    cert.ladder_gamma1.push_back(gamma1_candidates[c]);
    cert.ladder_gamma2.push_back(g2);
    if (g2 <= gamma2_cap) chosen = static_cast<int>(c);
  }
  if (chosen < 0) {
    cert.valid = false;
    cert.status = "no certificate under cap";
    return cert;
  }
  cert.valid = true;
  cert.status = "certified";
  cert.gamma1 = cert.ladder_gamma1[static_cast<std::size_t>(chosen)];
  cert.gamma2 = cert.ladder_gamma2[static_cast<std::size_t>(chosen)];

  std::vector<double> margin(data.L.size());
  std::size_t worst = 0;
  for (std::size_t k = 0; k < margin.size(); ++k) {
    margin[k] = data.L[k] - cert.gamma1 * data.absV[k] + cert.gamma2;
    if (margin[k] < margin[worst]) worst = k;
  }
  cert.worst_point = grid.point(static_cast<int>(worst));
  cert.min_margin = margin[worst];
  std::vector<double> sorted = margin;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  cert.median_margin = sorted[sorted.size() / 2];

  const int bins = 10;
  const double lo = cert.min_margin;
  const double hi = *std::max_element(margin.begin(), margin.end());
  cert.margin_counts.assign(bins, 0);
  for (int b = 0; b <= bins; ++b) cert.margin_edges.push_back(lo + (hi - lo) * b / bins);
  for (double m : margin) {
    int b = hi > lo ? static_cast<int>((m - lo) / (hi - lo) * bins) : 0;
    cert.margin_counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1;
  }

  const NodalData fine = sample_grid(field, refined(grid));
  double fine_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fine.L.size(); ++k) {
    fine_min = std::min(fine_min, fine.L[k] - cert.gamma1 * fine.absV[k] + cert.gamma2);
  }
  cert.refined_min_margin = fine_min;
  cert.refined_gamma2 = gamma2_from(fine, cert.gamma1);
  cert.margin_drop = cert.min_margin - fine_min;
  return cert;
}

AsymptoticReport diagnose_asymptotics(const ElectromagneticField& field,
                                      const std::vector<double>& radii, double tolerance,
                                      int angular_samples) {
  if (radii.size() < 4) throw std::invalid_argument("asymptotic diagnostics need at least 4 radii");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("radii must be strictly increasing");
  }
  AsymptoticReport rep;
  rep.radii = radii;
  rep.tolerance = tolerance;

  std::vector<std::vector<double>> dirs;
  if (field.dim() == 1) {
    dirs = {{-1.0}, {1.0}};
  } else {
    for (int k = 0; k < angular_samples; ++k) {
      const double t = 2.0 * std::numbers::pi * k / angular_samples;
      dirs.push_back({std::cos(t), std::sin(t)});
    }
  }
  std::vector<double> x(static_cast<std::size_t>(field.dim()));
  for (double r : radii) {
    double r1 = 0.0, r2 = 0.0;
    for (const auto& u : dirs) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = r * u[i];
      const WeightSample s = sample(field, x);
      // (|grad V| + |grad B|) / m^{3/2} formed as ((...)/m)/sqrt(m) to survive huge m
      r1 = std::max(r1, (s.abs_grad_V + s.abs_grad_B) / s.m / std::sqrt(s.m));
      r2 = std::max(r2, std::max(-s.V1, 0.0) / s.m);
    }
    rep.ratio1.push_back(r1);
    rep.ratio2.push_back(r2);
  }
  rep.ratio1_pass = trend_pass(rep.ratio1, tolerance);
  rep.ratio2_pass = trend_pass(rep.ratio2, tolerance);
  rep.pass = rep.ratio1_pass && rep.ratio2_pass;
  return rep;
}

}  // namespace nonacc
