#include "nonacc/forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nonacc {

namespace {

ElectromagneticField without_potential(const ElectromagneticField& f) {
  std::vector<expr::Expr> A;
  for (int k = 0; k < f.dim(); ++k) A.push_back(f.A(k));
  return ElectromagneticField(f.dim(), expr::Expr(), std::move(A));
}

// sum h^d w_j |u_j|^2
double weighted_mass(const Grid& g, const Eigen::VectorXd& w, const Eigen::VectorXcd& u) {
  return g.cell_volume() * (w.array() * u.array().abs2()).sum();
}

double mass(const Grid& g, const Eigen::VectorXcd& u) { return g.cell_volume() * u.squaredNorm(); }

void check_length(const FormContext& ctx, const Eigen::VectorXcd& u) {
  if (u.size() != ctx.grid().size()) throw GridMismatch("vector length does not match the form's grid");
}

}  // namespace

WeightFunction::WeightFunction(const Grid& grid, Eigen::VectorXd values) : values_(std::move(values)) {
  if (values_.size() != grid.size()) throw GridMismatch("weight length does not match the grid");
  if (!values_.allFinite()) throw std::invalid_argument("weight values must be finite");
  grad_norm_ = Eigen::VectorXd::Zero(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    double sq = 0.0;
    for (int l = 0; l < grid.dim(); ++l) {
      const int p = grid.neighbor(k, l, 1);
      const int q = grid.neighbor(k, l, -1);
      double g;
      if (p >= 0 && q >= 0) {
        g = (values_(p) - values_(q)) / (2.0 * grid.h(l));
      } else if (p >= 0) {
        g = (values_(p) - values_(k)) / grid.h(l);
      } else {
        g = (values_(k) - values_(q)) / grid.h(l);
      }
      sq += g * g;
    }
    grad_norm_(k) = std::sqrt(sq);
  }
}

WeightFunction WeightFunction::zero(const Grid& grid) { return WeightFunction(grid, Eigen::VectorXd::Zero(grid.size())); }

WeightFunction WeightFunction::from_function(const Grid& grid,
                                             const std::function<double(const std::vector<double>&)>& w) {
  Eigen::VectorXd v(grid.size());
  std::vector<double> x;
  for (int k = 0; k < grid.size(); ++k) {
    grid.point(k, x);
    v(k) = w(x);
  }
  return WeightFunction(grid, std::move(v));
}

FormContext::FormContext(const ElectromagneticField& field, const Grid& grid, double kappa)
    : field_(field),
      grid_(grid),
      D_(field, grid),
      op_(assemble_operator(field, grid, Scheme::gauge_covariant)),
      kinetic_(assemble_operator(without_potential(field), grid, Scheme::gauge_covariant)),
      kappa_(kappa) {
  const int N = grid.size();
  V_.resize(N);
  m_.resize(N);
  phi_.resize(N);
  absB2_.resize(N);
  grad_phi_sq_.resize(N);
  grad_psi_sq_.resize(N);
  std::vector<double> x;
  for (int k = 0; k < N; ++k) {
    grid.point(k, x);
    const WeightSample s = sample(field, x);
    V_(k) = s.V;
    m_(k) = s.m;
    phi_(k) = s.phi;
    absB2_(k) = s.abs_B * s.abs_B;
    grad_phi_sq_(k) = s.abs_grad_phi * s.abs_grad_phi;
    grad_psi_sq_(k) = s.abs_grad_psi * s.abs_grad_psi;
  }
}

double FormContext::tolerance(const Eigen::VectorXcd& ewu, Complex mu) const {
  const double h = grid_.max_h();
  const Eigen::VectorXd w = V_.cwiseAbs().array() + std::abs(mu);
  return kappa_ * h * h * (D_.energy(ewu) + weighted_mass(grid_, w, ewu));
}

Complex form_Q(const FormContext& ctx, const Eigen::VectorXcd& u, const Eigen::VectorXcd& v, Complex mu) {
  check_length(ctx, u);
  check_length(ctx, v);
  const Grid& g = ctx.grid();
  const Eigen::VectorXcd Vu = ctx.V().cwiseProduct(u);
  return ctx.gradient().inner(u, v) + inner(g, Vu, v) - mu * inner(g, u, v);
}

Complex form_Q(const ElectromagneticField& field, const Grid& grid, const GridFunction& u,
               const GridFunction& v, Complex mu) {
  if (u.grid != grid || v.grid != grid) throw GridMismatch("form arguments live on another grid");
  return form_Q(FormContext(field, grid), u.values, v.values, mu);
}

InequalityGap coercivity_gap(const FormContext& ctx, const Eigen::VectorXcd& u, Complex mu, const WeightFunction& W) {
  check_length(ctx, u);
  const Grid& g = ctx.grid();
  const int d = g.dim();
  const Eigen::ArrayXd eW = W.values().array().exp();
  const Eigen::VectorXcd e2Wu = (eW * eW).matrix().cast<Complex>().cwiseProduct(u);
  const Eigen::VectorXcd phi_e2Wu = ctx.phi().cast<Complex>().cwiseProduct(e2Wu);
  const Eigen::VectorXcd eWu = eW.matrix().cast<Complex>().cwiseProduct(u);

  InequalityGap out;
  out.id = "coercivity";
  out.lhs = form_Q(ctx, u, e2Wu, mu).real() + form_Q(ctx, u, phi_e2Wu, mu).imag();

  const Eigen::ArrayXd V1 = ctx.V().real().array();
  const Eigen::ArrayXd V2 = ctx.V().imag().array();
  const Eigen::ArrayXd gw = W.grad_norm().array();
  const Eigen::VectorXd weight =
      ((V2 * V2 + ctx.abs_B_sq().array() / (12.0 * d)) / ctx.m().array() + V1 - mu.real() - std::abs(mu.imag()) -
       9.0 * (ctx.grad_phi_sq().array() + ctx.grad_psi_sq().array() + gw * gw))
          .matrix();
  out.rhs = 0.5 * ctx.gradient().energy(eWu) + weighted_mass(g, weight, eWu);
  out.gap = out.lhs - out.rhs;
  out.tol = ctx.tolerance(eWu, mu);
  return out;
}

InequalityGap certified_coercivity_gap(const FormContext& ctx, const Eigen::VectorXcd& u, Complex mu,
                                       const Certificate& cert) {
  check_length(ctx, u);
  const Grid& g = ctx.grid();
  const Eigen::VectorXcd phi_u = ctx.phi().cast<Complex>().cwiseProduct(u);
  InequalityGap out;
  out.id = "certified_coercivity";
  out.lhs = std::abs(form_Q(ctx, u, u, mu)) + std::abs(form_Q(ctx, u, phi_u, mu));
  const Eigen::VectorXd weight =
      (cert.gamma1 * ctx.V().cwiseAbs().array() - mu.real() - std::abs(mu.imag()) - cert.gamma2).matrix();
  out.rhs = 0.5 * ctx.gradient().energy(u) + weighted_mass(g, weight, u);
  out.gap = out.lhs - out.rhs;
  out.tol = ctx.tolerance(u, mu);
  return out;
}

Lemma lemma_from_string(const std::string& id) {
  if (id == "BmBV") return Lemma::BmBV;
  if (id == "loc") return Lemma::loc;
  if (id == "nablaA") return Lemma::nablaA;
  if (id == "B2") return Lemma::B2;
  throw std::invalid_argument("unknown lemma id '" + id + "'");
}

std::string to_string(Lemma id) {
  switch (id) {
    case Lemma::BmBV: return "BmBV";
    case Lemma::loc: return "loc";
    case Lemma::nablaA: return "nablaA";
    case Lemma::B2: return "B2";
  }
  return "?";
}

InequalityGap lemma_gap(const FormContext& ctx, Lemma id, const Eigen::VectorXcd& u, const LemmaParams& params) {
  check_length(ctx, u);
  const Grid& g = ctx.grid();
  const LinkGradient& D = ctx.gradient();
  InequalityGap out;
  out.id = to_string(id);
  out.tol = ctx.tolerance(u, 0.0);
  switch (id) {
    case Lemma::BmBV: {
      out.lhs = weighted_mass(g, ctx.abs_B_sq().cwiseQuotient(ctx.m()), u);
      out.rhs = 3.0 * g.dim() * D.energy(u) + weighted_mass(g, ctx.grad_psi_sq(), u);
      out.gap = out.rhs - out.lhs;
      break;
    }
    case Lemma::loc: {
      if (params.chi.size() != g.size()) throw std::invalid_argument("loc needs a nodal cutoff chi on the grid");
      const Eigen::VectorXcd chi = params.chi.cast<Complex>();
      const Eigen::VectorXcd chi_u = chi.cwiseProduct(u);
      const Eigen::VectorXcd chi2_u = chi.cwiseProduct(chi_u);
      const WeightFunction cutoff(g, params.chi);
      const Eigen::VectorXd grad_sq = cutoff.grad_norm().cwiseAbs2();
      out.lhs = D.inner(u, chi2_u).real();
      out.rhs = D.energy(chi_u) - weighted_mass(g, grad_sq, u);
      out.gap = -std::abs(out.lhs - out.rhs);
      break;
    }
    case Lemma::nablaA: {
      if (!(params.delta > 0.0)) throw std::invalid_argument("nablaA needs delta > 0");
      const Eigen::VectorXcd L0u = ctx.kinetic().apply(u);
      out.lhs = 2.0 * D.energy(u);
      out.rhs = params.delta * mass(g, L0u) + mass(g, u) / params.delta;
      out.gap = out.rhs - out.lhs;
      break;
    }
    case Lemma::B2: {
      const Eigen::VectorXcd L0u = ctx.kinetic().apply(u);
      const Eigen::VectorXcd Vu = ctx.V().cwiseProduct(u);
      const Eigen::VectorXd m_links = D.link_average(ctx.m());
      const Eigen::VectorXcd Du = D.apply(u);
      out.lhs = weighted_mass(g, ctx.abs_B_sq(), u) + g.cell_volume() * (m_links.array() * Du.array().abs2()).sum();
      out.rhs = mass(g, L0u) + mass(g, Vu) + mass(g, u);
      out.constant = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
      out.gap = 0.0;
      out.tol = 0.0;
      break;
    }
  }
  return out;
}

double graph_norm_estimate(const FormContext& ctx, double delta, int sample_size, std::uint64_t seed, double margin) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("graph norm estimate needs 0 < delta < 1");
  const Grid& g = ctx.grid();
  double best = 0.0;
  for (int s = 0; s < sample_size; ++s) {
    const Eigen::VectorXcd u = random_compact_support(g, margin, seed + static_cast<std::uint64_t>(s)).values;
    const double uu = mass(g, u);
    const double a = mass(g, ctx.kinetic().apply(u)) + mass(g, ctx.V().cwiseProduct(u));
    const double b = mass(g, ctx.op().apply(u));
    best = std::max(best, ((1.0 - delta) * a - b) / uu);
  }
  return best;
}

}  // namespace nonacc
