#include "nonacc/agmon.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace nonacc {

namespace {

double weighted_norm(const AgmonProfile& p, const Eigen::VectorXcd& psi, double rate) {
  const Eigen::ArrayXd e = (rate * p.distance.array()).exp();
  return std::sqrt(p.grid.cell_volume() * (e * e * psi.array().abs2()).sum());
}

Eigen::VectorXcd normalized(const Grid& g, const Eigen::VectorXcd& psi) {
  const double n = norm(g, psi);
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize a zero vector");
  return psi / n;
}

// Solves the upwind quadratic sum_i ((T - a_i)/h_i)^2 = f^2 over the known directions.
double upwind_update(double a, double ha, double b, double hb, double f) {
  if (!std::isfinite(b)) return a + ha * f;
  if (!std::isfinite(a)) return b + hb * f;
  // try the two-sided solution first
  const double A = 1.0 / (ha * ha) + 1.0 / (hb * hb);
  const double B = -2.0 * (a / (ha * ha) + b / (hb * hb));
  const double C = a * a / (ha * ha) + b * b / (hb * hb) - f * f;
  const double disc = B * B - 4.0 * A * C;
  if (disc >= 0.0) {
    const double t = (-B + std::sqrt(disc)) / (2.0 * A);
    if (t >= std::max(a, b)) return t;
  }
  return std::min(a + ha * f, b + hb * f);
}

}  // namespace

int default_base_index(const Grid& grid) {
  std::vector<double> target(static_cast<std::size_t>(grid.dim()));
  bool origin_inside = true;
  for (int a = 0; a < grid.dim(); ++a) origin_inside = origin_inside && grid.lower(a) < 0.0 && 0.0 < grid.upper(a);
  for (int a = 0; a < grid.dim(); ++a) {
    target[static_cast<std::size_t>(a)] = origin_inside ? 0.0 : 0.5 * (grid.lower(a) + grid.upper(a));
  }
  return grid.nearest(target);
}

Eigen::VectorXd eikonal_1d(const Grid& grid, const Eigen::VectorXd& weight, int base_index) {
  if (grid.dim() != 1) throw std::invalid_argument("eikonal_1d needs a 1D grid");
  const int n = grid.size();
  const Eigen::VectorXd f = weight.cwiseMax(0.0).cwiseSqrt();
  const double h = grid.h(0);
  Eigen::VectorXd d(n);
  d(base_index) = 0.0;
  for (int i = base_index + 1; i < n; ++i) d(i) = d(i - 1) + 0.5 * h * (f(i) + f(i - 1));
  for (int i = base_index - 1; i >= 0; --i) d(i) = d(i + 1) + 0.5 * h * (f(i) + f(i + 1));
  return d;
}

Eigen::VectorXd fast_marching(const Grid& grid, const Eigen::VectorXd& weight, int base_index) {
  if (grid.dim() != 2) throw std::invalid_argument("fast_marching needs a 2D grid");
  const int N = grid.size();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd T = Eigen::VectorXd::Constant(N, inf);
  std::vector<char> known(static_cast<std::size_t>(N), 0);
  using Item = std::pair<double, int>;
  // smaller value first; ties broken by smaller index
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  T(base_index) = 0.0;
  heap.emplace(0.0, base_index);
  const double hx = grid.h(0), hy = grid.h(1);
  while (!heap.empty()) {
    const auto [t, k] = heap.top();
    heap.pop();
    if (known[static_cast<std::size_t>(k)] || t > T(k)) continue;
    known[static_cast<std::size_t>(k)] = 1;
    for (int axis = 0; axis < 2; ++axis) {
      for (int dir : {-1, 1}) {
        const int nb = grid.neighbor(k, axis, dir);
        if (nb < 0 || known[static_cast<std::size_t>(nb)]) continue;
        auto best_known = [&](int ax) {
          double v = inf;
          for (int s : {-1, 1}) {
            const int q = grid.neighbor(nb, ax, s);
            if (q >= 0 && known[static_cast<std::size_t>(q)]) v = std::min(v, T(q));
          }
          return v;
        };
        const double f = std::sqrt(std::max(weight(nb), 0.0));
        const double cand = upwind_update(best_known(0), hx, best_known(1), hy, f);
        if (cand < T(nb)) {
          T(nb) = cand;
          heap.emplace(cand, nb);
        }
      }
    }
  }
  return T;
}

Eigen::VectorXd agmon_distance_from_weight(const Grid& grid, const Eigen::VectorXd& weight, int base_index) {
  if (weight.size() != grid.size()) throw GridMismatch("weight length does not match the grid");
  if (base_index < 0 || base_index >= grid.size()) throw std::out_of_range("base point is not a grid node");
  return grid.dim() == 1 ? eikonal_1d(grid, weight, base_index) : fast_marching(grid, weight, base_index);
}

AgmonProfile agmon_distance(const ElectromagneticField& field, const Grid& grid, Complex lambda, double gamma1,
                            double gamma2, std::optional<int> base_index) {
  if (field.dim() != grid.dim()) throw std::invalid_argument("field and grid dimensions differ");
  AgmonProfile p{lambda, gamma1, gamma2, grid, base_index.value_or(default_base_index(grid)), {}, {}, {}};
  p.base_point = grid.point(p.base_index);
  p.weight.resize(grid.size());
  std::vector<double> x;
  const double shift = lambda.real() + std::abs(lambda.imag()) + gamma2;
  for (int k = 0; k < grid.size(); ++k) {
    grid.point(k, x);
    p.weight(k) = std::max(gamma1 * std::abs(field.potential(x)) - shift, 0.0);
  }
  p.distance = agmon_distance_from_weight(grid, p.weight, p.base_index);
  return p;
}

double distance_at(const AgmonProfile& profile, const std::vector<double>& x) {
  const Grid& g = profile.grid;
  auto locate = [&](int axis, double v, int& i0, double& t) {
    const double center = 0.5 * (g.lower(axis) + g.upper(axis));
    const double s = (v - center) / g.h(axis) + 0.5 * (g.n(axis) - 1);
    const double c = std::clamp(s, -1.0, static_cast<double>(g.n(axis)));
    i0 = std::clamp(static_cast<int>(std::floor(c)), 0, g.n(axis) - 2);
    t = c - i0;
  };
  int i0, j0 = 0;
  double tx, ty = 0.0;
  locate(0, x[0], i0, tx);
  if (g.dim() == 1) return (1.0 - tx) * profile.distance(i0) + tx * profile.distance(i0 + 1);
  locate(1, x[1], j0, ty);
  const auto& d = profile.distance;
  return (1 - tx) * (1 - ty) * d(g.index(i0, j0)) + tx * (1 - ty) * d(g.index(i0 + 1, j0)) +
         (1 - tx) * ty * d(g.index(i0, j0 + 1)) + tx * ty * d(g.index(i0 + 1, j0 + 1));
}

DecayReport certify_decay(const AgmonProfile& profile, const Eigen::VectorXcd& psi_in, const DecayOptions& opts,
                          const AgmonProfile* enlarged, const Eigen::VectorXcd* enlarged_psi) {
  if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  const Grid& g = profile.grid;
  if (psi_in.size() != g.size()) throw GridMismatch("eigenfunction does not live on the profile grid");
  const Eigen::VectorXcd psi = normalized(g, psi_in);
  DecayReport rep;
  rep.rate = (1.0 - opts.epsilon) / 3.0;
  rep.slope_tol = opts.slope_tol.value_or(0.05 * rep.rate);
  rep.weighted_norm = weighted_norm(profile, psi, rep.rate);
  if (enlarged && enlarged_psi) {
    const Eigen::VectorXcd big = normalized(enlarged->grid, *enlarged_psi);
    rep.enlarged_weighted_norm = weighted_norm(*enlarged, big, rep.rate);
    const double a = rep.weighted_norm, b = *rep.enlarged_weighted_norm;
    rep.norm_ratio = std::max(a, b) / std::min(a, b);
    rep.stable = rep.norm_ratio <= 2.0;
  }

  if (profile.distance.maxCoeff() == 0.0) {
    rep.vacuous = true;
    rep.verdict = rep.stable ? "pass" : "fail";
    return rep;
  }

  std::vector<double> sorted(profile.distance.data(), profile.distance.data() + profile.distance.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  std::vector<double> xs, ys;
  for (int k = 0; k < g.size(); ++k) {
    const double a = std::abs(psi(k));
    if (a >= opts.floor && a <= opts.cap && profile.distance(k) > median) {
      xs.push_back(profile.distance(k));
      ys.push_back(std::log(a));
    }
  }
  rep.window_size = static_cast<int>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double nw = static_cast<double>(xs.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - sx / nw) * (xs[i] - sx / nw);
    sxy += (xs[i] - sx / nw) * (ys[i] - sy / nw);
  }
  if (xs.size() < 3 || !(sxx > 0.0)) {
    rep.verdict = "inconclusive";
    return rep;
  }
  rep.slope = sxy / sxx;
  rep.verdict = (rep.slope <= -rep.rate + rep.slope_tol && rep.stable) ? "pass" : "fail";
  return rep;
}

std::vector<DecayReport> certify_generalized(const AgmonProfile& profile, const Eigen::MatrixXcd& range,
                                             const DecayOptions& opts, const AgmonProfile* enlarged,
                                             const Eigen::MatrixXcd* enlarged_range) {
  std::vector<DecayReport> out;
  if (range.cols() == 0) return out;
  std::optional<double> big_max;
  if (enlarged && enlarged_range && enlarged_range->cols() > 0) {
    double m = 0.0;
    for (Eigen::Index c = 0; c < enlarged_range->cols(); ++c) {
      m = std::max(m, weighted_norm(*enlarged, normalized(enlarged->grid, enlarged_range->col(c)),
                                    (1.0 - opts.epsilon) / 3.0));
    }
    big_max = m;
  }
  double small_max = 0.0;
  for (Eigen::Index c = 0; c < range.cols(); ++c) {
    out.push_back(certify_decay(profile, range.col(c), opts));
    small_max = std::max(small_max, out.back().weighted_norm);
  }
  if (big_max) {
    const double ratio = std::max(small_max, *big_max) / std::min(small_max, *big_max);
    for (auto& r : out) {
      r.enlarged_weighted_norm = big_max;
      r.norm_ratio = ratio;
      r.stable = ratio <= 2.0;
      if (!r.stable && r.verdict == "pass") r.verdict = "fail";
    }
  }
  return out;
}

void write_profile_csv(std::ostream& os, const AgmonProfile& profile, const Eigen::VectorXcd& psi_in) {
  const Grid& g = profile.grid;
  const Eigen::VectorXcd psi = normalized(g, psi_in);
  os << (g.dim() == 1 ? "x1" : "x1,x2") << ",d_ag,abs_psi,log_abs_psi\n";
  os << std::setprecision(17);
  std::vector<double> x;
  for (int k = 0; k < g.size(); ++k) {
    g.point(k, x);
    for (double c : x) os << c << ',';
    const double a = std::abs(psi(k));
    os << profile.distance(k) << ',' << a << ',' << std::log(a) << '\n';
  }
}

}  // namespace nonacc
