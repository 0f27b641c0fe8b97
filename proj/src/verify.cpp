#include "ianpe/verify.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ianpe {

ResolventOracle ResolventOracle::full(const CompositeProblem& p, double tol) {
  return ResolventOracle(p, Operator::FullOperator, tol);
}

ResolventOracle ResolventOracle::linearized(const CompositeProblem& p,
                                            Vec anchor, double tol) {
  ResolventOracle r(p, Operator::ExactLinearization, tol);
  r.H_ = p.hess_g(anchor);
  r.anchor_ = std::move(anchor);
  return r;
}

ResolventOracle ResolventOracle::linearized_inexact(const CompositeProblem& p,
                                                    Vec anchor,
                                                    DenseSymMatrix H,
                                                    double tol) {
  ResolventOracle r(p, Operator::InexactLinearization, tol);
  r.H_ = std::move(H);
  r.anchor_ = std::move(anchor);
  return r;
}

// linearized operator, h = 0: (I + lambda H) y = x - lambda grad(anchor) +
// lambda H anchor
Vec ResolventOracle::resolve_linear(double lambda, const Vec& x) const {
  const Vec grad_anchor = p_->grad_g(anchor_);
  const Vec h_anchor = H_.matvec(anchor_);
  Vec rhs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    rhs[i] = x[i] - lambda * grad_anchor[i] + lambda * h_anchor[i];
  DenseSymMatrix M = H_;
  M.scale(lambda);
  M.add_shift(1.0);
  return cholesky_solve(M, rhs).solution;
}

// full operator, h = 0: damped Newton on F(y) = lambda grad g(y) + y - x,
// the gradient of the strongly convex function lambda g(y) + ||y - x||^2/2
Vec ResolventOracle::resolve_full_smooth(double lambda, const Vec& x) const {
  Vec y = x;
  const double scale = std::max(1.0, nrm2(x));
  for (int it = 0; it < 200; ++it) {
    const Vec g = p_->grad_g(y);
    Vec F(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      F[i] = lambda * g[i] + y[i] - x[i];
    const double fn = nrm2(F);
    if (fn <= tol_ * scale) return y;
    DenseSymMatrix J = p_->hess_g(y);
    J.scale(lambda);
    J.add_shift(1.0);
    const Vec dy = cholesky_solve(J, F).solution;
    // merit m(y) = lambda g(y) + ||y-x||^2/2 decreases along -dy
    const double m0 =
        lambda * p_->eval_g(y) + 0.5 * nrm2_diff(y, x) * nrm2_diff(y, x);
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      Vec cand = y;
      axpy(-t, dy, cand);
      const double mc = lambda * p_->eval_g(cand) +
                        0.5 * nrm2_diff(cand, x) * nrm2_diff(cand, x);
      if (mc <= m0) {
        y = std::move(cand);
        break;
      }
      t *= 0.5;
    }
  }
  throw NumericalFailure("ResolventOracle: Newton failed to reach tolerance");
}

// generic path: accelerated proximal gradient on
//   min_u  smooth(u) + h(u),  smooth strongly convex with mu = 1/lambda
Vec ResolventOracle::resolve_apg(double lambda, const Vec& x) const {
  const std::size_t d = x.size();
  const bool linearized = op_ != Operator::FullOperator;
  const double scale = std::max(1.0, nrm2(x));

  double lips;
  if (linearized)
    lips = spectral_norm_upper(H_, 200) + 1.0 / lambda;
  else
    lips = p_->L1() + 1.0 / lambda;
  const double mu = 1.0 / lambda;
  const double q = mu / lips;
  const double beta = (1.0 - std::sqrt(q)) / (1.0 + std::sqrt(q));
  const double tau = 1.0 / lips;

  auto smooth_grad = [&](const Vec& u) {
    if (linearized) {
      const Vec du = vsub(u, anchor_);
      Vec g = H_.matvec(du);
      const Vec ga = p_->grad_g(anchor_);
      for (std::size_t i = 0; i < d; ++i)
        g[i] += ga[i] + (u[i] - x[i]) / lambda;
      return g;
    }
    Vec g = p_->grad_g(u);
    for (std::size_t i = 0; i < d; ++i) g[i] += (u[i] - x[i]) / lambda;
    return g;
  };

  Vec u_prev = x, w = x;
  for (int it = 0; it < 2000000; ++it) {
    const Vec gw = smooth_grad(w);
    Vec z(d);
    for (std::size_t i = 0; i < d; ++i) z[i] = w[i] - tau * gw[i];
    Vec u = p_->prox_h(z, tau);
    // fixed-point residual with the subgradient witness from the prox
    const Vec s = p_->subgrad_from_prox(z, tau, u);
    const Vec gu = smooth_grad(u);
    const double resid = std::sqrt(pairwise_sum(d, [&](std::size_t i) {
      // lambda * (operator value) + u - x; smooth_grad already carries
      // the (u - x)/lambda proximal term
      const double t = lambda * (gu[i] + s[i]);
      return t * t;
    }));
    if (resid <= tol_ * scale) return u;
    Vec w_next(d);
    for (std::size_t i = 0; i < d; ++i)
      w_next[i] = u[i] + beta * (u[i] - u_prev[i]);
    u_prev = std::move(u);
    w = std::move(w_next);
  }
  throw NumericalFailure("ResolventOracle: APG failed to reach tolerance");
}

Vec ResolventOracle::resolve(double lambda, const Vec& x) const {
  if (!(lambda > 0.0)) throw InvalidTolerance("resolve: lambda > 0");
  if (x.size() != p_->dim()) throw DimensionMismatch("resolve: x dim");
  if (p_->h().is_zero()) {
    if (op_ == Operator::FullOperator) return resolve_full_smooth(lambda, x);
    return resolve_linear(lambda, x);
  }
  return resolve_apg(lambda, x);
}

double ResolventOracle::phi(double lambda, const Vec& x) const {
  return lambda * nrm2_diff(resolve(lambda, x), x);
}

std::string format_report(const CheckReport& r) {
  std::ostringstream os;
  os << r.name << ' ' << (r.pass ? "PASS" : "FAIL") << ' ' << r.margin;
  if (!r.detail.empty()) os << ' ' << r.detail;
  return os.str();
}

namespace {
CheckReport make_report(const std::string& name,
                        std::initializer_list<double> slacks,
                        const std::string& detail = {}) {
  CheckReport rep;
  rep.name = name;
  rep.margin = std::numeric_limits<double>::infinity();
  for (double s : slacks) {
    rep.margin = std::min(rep.margin, s);
    if (s < 0.0) rep.pass = false;
  }
  rep.detail = detail;
  return rep;
}
}  // namespace

CheckReport check_phi_monotonicity(const ResolventOracle& oracle, const Vec& x,
                                   double lambda_tilde, double lambda,
                                   double slack) {
  if (!(lambda_tilde > 0.0) || lambda_tilde > lambda)
    throw InvalidTolerance("check_phi_monotonicity: 0 < lt <= lambda");
  const double phi_t = oracle.phi(lambda_tilde, x);
  const double phi_l = oracle.phi(lambda, x);
  const double ratio = lambda / lambda_tilde;
  const double lo = ratio * phi_t;
  const double hi = ratio * ratio * phi_t;
  const double scale = std::max({phi_l, hi, 1.0});
  return make_report("phi_monotonicity",
                     {(phi_l - lo + slack * scale) / scale,
                      (hi - phi_l + slack * scale) / scale});
}

CheckReport check_phi_sandwich(const ResolventOracle& oracle, double lambda,
                               const Vec& x, const Vec& y, double eps,
                               double sigma, double slack) {
  (void)eps;  // part of the certificate; the sandwich uses only sigma
  const double phi = oracle.phi(lambda, x);
  const double t = lambda * nrm2_diff(y, x);
  const double scale = std::max({phi, t, 1.0});
  return make_report("phi_sandwich",
                     {(phi - (1.0 - sigma) * t + slack * scale) / scale,
                      ((1.0 + sigma) * t - phi + slack * scale) / scale});
}

CheckReport check_phi_shift(const CompositeProblem& p, const DenseSymMatrix& Hx,
                            const DenseSymMatrix& Hxt, double lambda,
                            const Vec& x, const Vec& x_tilde, double delta,
                            double C, double slack) {
  if (lambda * delta > C * (1.0 + 1e-12))
    throw InvalidTolerance("check_phi_shift: lambda*delta <= C required");
  const auto ox = ResolventOracle::linearized_inexact(p, x, Hx);
  const auto oxt = ResolventOracle::linearized_inexact(p, x_tilde, Hxt);
  const double phi_x = ox.phi(lambda, x);
  const double phi_xt = oxt.phi(lambda, x_tilde);
  const double dx = nrm2_diff(x_tilde, x);
  const double eta = std::min(phi_x, phi_xt);
  const double bound = (1.0 + 2.0 * C) * lambda * dx +
                       p.L2() * lambda * lambda * dx * dx +
                       2.0 * p.L2() * lambda * dx * eta;
  const double lhs = std::fabs(phi_x - phi_xt);
  const double scale = std::max({lhs, bound, 1.0});
  return make_report("phi_shift", {(bound - lhs + slack * scale) / scale});
}

CheckReport check_phi_distance_bound(const CompositeProblem& p,
                                     const DenseSymMatrix& Hx, double lambda,
                                     const Vec& x, const Vec& xstar,
                                     double delta, double C, double slack) {
  if (lambda * delta > C * (1.0 + 1e-12))
    throw InvalidTolerance("check_phi_distance_bound: lambda*delta <= C");
  if (!(C < 1.0))
    throw InvalidTolerance("check_phi_distance_bound: C < 1");
  const auto ox = ResolventOracle::linearized_inexact(p, x, Hx);
  const double phi = ox.phi(lambda, x);
  const double dist = nrm2_diff(x, xstar);
  const double lh = p.Lh();
  const double bound = (2.0 * lh * lambda * lambda + lambda * dist +
                        lambda * lambda * p.L2() * dist * dist) /
                       (1.0 - C);
  const double scale = std::max({phi, bound, 1.0});
  return make_report("phi_distance_bound", {(bound - phi + slack * scale) / scale});
}

}  // namespace ianpe

#include "ianpe/rng.hpp"
#include "ianpe/synth.hpp"

namespace ianpe {

BatterySummary run_phi_batteries(std::size_t instances, std::uint64_t seed,
                                 std::size_t d_max,
                                 std::vector<CheckReport>* failures_out,
                                 std::vector<CheckReport>* all_out) {
  if (d_max < 3) throw ConfigError("run_phi_batteries: d_max >= 3");
  BatterySummary sum;
  sum.min_margin = std::numeric_limits<double>::infinity();
  const double C = 0.1;
  const double sigma_hat = 0.1;

  for (std::size_t t = 0; t < instances; ++t) {
    Rng rng(seed, 0x62617474, t);
    const std::size_t d = 2 + rng.next_below(d_max - 1);
    LogisticGenOptions opt;
    opt.n = 4 * d;
    opt.d = d;
    opt.seed = seed * 1000003ull + t;
    opt.alpha = 1e-3;
    const LogisticRegression prob = gen_logistic(opt);

    Vec x(d), xt(d);
    for (auto& v : x) v = rng.next_gaussian();
    for (std::size_t i = 0; i < d; ++i)
      xt[i] = x[i] + 0.3 * rng.next_gaussian();
    const double lambda = 0.05 + 2.0 * rng.next_unit();
    const double lambda_tilde = lambda * (0.2 + 0.8 * rng.next_unit());
    // inexact linearization: a (delta/2) I shift keeps the error below delta
    // and preserves the L2 Lipschitz property of the operator family
    const double delta = rng.next_unit() * std::min(0.3, C / lambda);
    DenseSymMatrix Hx = prob.hess_g(x);
    Hx.add_shift(0.5 * delta);
    DenseSymMatrix Hxt = prob.hess_g(xt);
    Hxt.add_shift(0.5 * delta);

    const auto ox = ResolventOracle::linearized_inexact(prob, x, Hx);

    std::vector<CheckReport> reports;
    reports.push_back(check_phi_monotonicity(ox, x, lambda_tilde, lambda));
    reports.push_back(
        check_phi_shift(prob, Hx, Hxt, lambda, x, xt, delta, C));

    // a certified inexact solution for the sandwich: exact solve of the
    // linearized subproblem, then a perturbation kept within sigma_hat
    {
      const Vec grad = prob.grad_g(x);
      DenseSymMatrix M = Hx;
      M.scale(lambda);
      M.add_shift(1.0);
      Vec y = vadd(x, cholesky_solve(M, scaled(grad, -lambda)).solution);
      Vec noise(d);
      for (auto& v : noise) v = rng.next_gaussian();
      const double nn = nrm2(noise);
      if (nn > 0.0) {
        double rho = 0.3 * sigma_hat * nrm2_diff(y, x) / nn;
        for (int attempt = 0; attempt < 60; ++attempt) {
          Vec yp = y;
          axpy(rho, noise, yp);
          const Vec dy = vsub(yp, x);
          Vec u = Hx.matvec(dy);
          for (std::size_t i = 0; i < d; ++i) u[i] += grad[i];
          const double lhs = std::sqrt(pairwise_sum(d, [&](std::size_t i) {
            const double r = lambda * u[i] + yp[i] - x[i];
            return r * r;
          }));
          if (lhs <= sigma_hat * nrm2(dy)) {
            y = std::move(yp);
            break;
          }
          rho *= 0.5;
        }
      }
      reports.push_back(check_phi_sandwich(ox, lambda, x, y, 0.0, sigma_hat));
    }

    {
      const Reference ref = reference_minimizer(prob, Vec(d, 0.0), 1e-12, 300);
      reports.push_back(check_phi_distance_bound(prob, Hx, lambda, x,
                                                 ref.xstar, delta, C));
    }

    ++sum.instances;
    for (auto& r : reports) {
      ++sum.checks_run;
      sum.min_margin = std::min(sum.min_margin, r.margin);
      if (!r.pass) {
        ++sum.failures;
        if (failures_out) failures_out->push_back(r);
      }
      if (all_out) all_out->push_back(std::move(r));
    }
  }
  return sum;
}

}  // namespace ianpe
