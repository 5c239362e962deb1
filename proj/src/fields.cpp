#include "nonacc/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace nonacc {

namespace {

using expr::Expr;

// 3-point Gauss-Legendre on [0, 1].
constexpr double kGaussNodes[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGaussWeights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

double real_component(const Expr& a, std::span<const double> x, int k) {
  const Complex v = a.eval(x);
  if (std::abs(v.imag()) > 1e-14 * std::abs(v)) {
    throw expr::EvalError("magnetic potential component A" + std::to_string(k + 1) +
                          " is not real: " + a.str());
  }
  return v.real();
}

}  // namespace

ElectromagneticField::ElectromagneticField(int dim, Expr V, std::vector<Expr> A)
    : dim_(dim), V_(std::move(V)), A_(std::move(A)) {
  if (dim < 1) throw std::invalid_argument("field dimension must be >= 1");
  if (A_.empty()) A_.assign(static_cast<std::size_t>(dim), Expr());
  if (static_cast<int>(A_.size()) != dim) {
    throw std::invalid_argument("magnetic potential needs " + std::to_string(dim) +
                                " components, got " + std::to_string(A_.size()));
  }
  if (V_.max_variable() > dim) throw std::invalid_argument("V uses a variable beyond x" + std::to_string(dim));
  for (const auto& a : A_) {
    if (a.max_variable() > dim) throw std::invalid_argument("A uses a variable beyond x" + std::to_string(dim));
    magnetic_ = magnetic_ || !a.is_zero();
  }

  const auto d = static_cast<std::size_t>(dim);
  dV_.resize(d);
  dA_.assign(d, std::vector<Expr>(d));
  for (std::size_t j = 0; j < d; ++j) {
    dV_[j] = expr::differentiate(V_, static_cast<int>(j) + 1);
    for (std::size_t k = 0; k < d; ++k) dA_[j][k] = expr::differentiate(A_[k], static_cast<int>(j) + 1);
  }
  B_.assign(d, std::vector<Expr>(d));
  dB_.assign(d, std::vector<std::vector<Expr>>(d, std::vector<Expr>(d)));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j + 1; k < d; ++k) {
      B_[j][k] = expr::make_sub(dA_[j][k], dA_[k][j]);
      for (std::size_t l = 0; l < d; ++l) dB_[l][j][k] = expr::differentiate(B_[j][k], static_cast<int>(l) + 1);
    }
  }
}

ElectromagneticField ElectromagneticField::from_strings(int dim, const std::string& V,
                                                        const std::vector<std::string>& A) {
  std::vector<Expr> a;
  a.reserve(A.size());
  for (const auto& s : A) a.push_back(expr::parse(s, dim));
  return ElectromagneticField(dim, expr::parse(V, dim), std::move(a));
}

const Expr& ElectromagneticField::B(int j, int k) const {
  if (!(0 <= j && j < k && k < dim_)) throw std::out_of_range("B(j, k) requires j < k");
  return B_[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

const Expr& ElectromagneticField::dB(int l, int j, int k) const {
  if (!(0 <= j && j < k && k < dim_ && 0 <= l && l < dim_)) throw std::out_of_range("dB(l, j, k) requires j < k");
  return dB_[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

Complex ElectromagneticField::potential(std::span<const double> x) const { return V_.eval(x); }

std::vector<double> ElectromagneticField::vector_potential(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(dim_));
  for (int k = 0; k < dim_; ++k) out[static_cast<std::size_t>(k)] = real_component(A_[static_cast<std::size_t>(k)], x, k);
  return out;
}

double ElectromagneticField::line_integral(std::span<const double> p, std::span<const double> q) const {
  if (!magnetic_) return 0.0;
  std::vector<double> y(static_cast<std::size_t>(dim_));
  double total = 0.0;
  for (int g = 0; g < 3; ++g) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = p[i] + kGaussNodes[g] * (q[i] - p[i]);
    double dot = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (q[kk] == p[kk]) continue;
      dot += real_component(A_[kk], y, k) * (q[kk] - p[kk]);
    }
    total += kGaussWeights[g] * dot;
  }
  return total;
}

double ElectromagneticField::div_A(std::span<const double> x) const {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    s += real_component(dA_[kk][kk], x, k);
  }
  return s;
}

Eigen::MatrixXd ElectromagneticField::magnetic_tensor(std::span<const double> x) const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim_, dim_);
  for (int j = 0; j < dim_; ++j) {
    for (int k = j + 1; k < dim_; ++k) {
      const double v = B_[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].eval(x).real();
      b(j, k) = v;
      b(k, j) = -v;
    }
  }
  return b;
}

std::uint64_t ElectromagneticField::hash() const {
  std::uint64_t h = 1469598103934665603ULL ^ static_cast<std::uint64_t>(dim_);
  auto mix = [&h](std::uint64_t v) { h = (h ^ v) * 1099511628211ULL; };
  mix(V_.hash());
  for (const auto& a : A_) mix(a.hash());
  return h;
}

WeightSample sample(const ElectromagneticField& field, std::span<const double> x) {
  const int d = field.dim();
  WeightSample s;
  s.x.assign(x.begin(), x.end());
  s.V = field.potential(x);
  s.V1 = s.V.real();
  s.V2 = s.V.imag();
  s.abs_V = std::abs(s.V);

  s.B = field.magnetic_tensor(x);
  s.abs_B = s.B.stableNorm();
  s.m = std::hypot(1.0, s.abs_B, s.abs_V);
  s.phi = s.V2 / s.m;
  s.psi = s.B / s.m;

  // dB[l](j, k) = d_l B_jk, skew in (j, k)
  std::vector<Eigen::MatrixXd> dB(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(d, d));
  Eigen::VectorXd grad_B_entries(d);
  for (int l = 0; l < d; ++l) {
    auto& g = dB[static_cast<std::size_t>(l)];
    for (int j = 0; j < d; ++j) {
      for (int k = j + 1; k < d; ++k) {
        const double v = field.dB(l, j, k).eval(x).real();
        g(j, k) = v;
        g(k, j) = -v;
      }
    }
    grad_B_entries(l) = g.stableNorm();
  }
  s.abs_grad_B = grad_B_entries.stableNorm();

  s.grad_V.resize(static_cast<std::size_t>(d));
  Eigen::VectorXd grad_V_abs(d);
  for (int j = 0; j < d; ++j) {
    s.grad_V[static_cast<std::size_t>(j)] = field.dV(j).eval(x);
    grad_V_abs(j) = std::abs(s.grad_V[static_cast<std::size_t>(j)]);
  }
  s.abs_grad_V = grad_V_abs.stableNorm();

  s.grad_m.resize(d);
  s.grad_phi.resize(d);
  s.grad_psi.assign(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(d, d));
  // every product is formed after dividing by m so that huge potentials do not overflow
  const Complex v_over_m = s.V / s.m;
  double psi_sq = 0.0;
  for (int j = 0; j < d; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    const Complex dVj = s.grad_V[jj];
    const double dm = (s.psi.array() * dB[jj].array()).sum() + (std::conj(v_over_m) * dVj).real();
    const double dm_over_m = dm / s.m;
    s.grad_m(j) = dm;
    s.grad_phi(j) = dVj.imag() / s.m - s.phi * dm_over_m;
    s.grad_psi[jj] = dB[jj] / s.m - s.psi * dm_over_m;
    psi_sq += s.grad_psi[jj].squaredNorm();
  }
  s.abs_grad_phi = s.grad_phi.norm();
  s.abs_grad_psi = std::sqrt(psi_sq);
  return s;
}

double assumption_lhs(const WeightSample& s, int dim) {
  return (s.V2 * s.V2 + s.abs_B * s.abs_B / (12.0 * dim)) / s.m + s.V1 -
         9.0 * (s.abs_grad_phi * s.abs_grad_phi + s.abs_grad_psi * s.abs_grad_psi);
}

double assumption_lhs(const ElectromagneticField& field, std::span<const double> x) {
  return assumption_lhs(sample(field, x), field.dim());
}

}  // namespace nonacc
