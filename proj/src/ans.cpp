#include "ianpe/ans.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ianpe {

namespace {

void count_grad(const CompositeProblem& p, CostCounters* c) {
  if (c) c->grad_component_evals += std::max<std::size_t>(p.num_components(), 1);
}

// lhs of the certificate, recomputed from its parts
double certificate_lhs(double lambda, const Vec& u, const Vec& y, const Vec& x,
                       double eps) {
  const double r = std::sqrt(pairwise_sum(y.size(), [&](std::size_t i) {
    const double t = lambda * u[i] + y[i] - x[i];
    return t * t;
  }));
  return r * r + 2.0 * lambda * eps;
}

AnsCertificate stationary_certificate(const Vec& x, const Vec& grad) {
  AnsCertificate cert;
  cert.y = x;
  cert.u = Vec(x.size(), 0.0);
  cert.model_grad_y = grad;
  cert.stationary = true;
  return cert;
}

// Smooth path: one certified linear solve of (lambda H + I)(y - x) =
// -lambda grad, then u = grad + H (y-x) which makes the certificate lhs the
// recomputed linear-system residual.
AnsCertificate solve_smooth(const CompositeProblem& p, const FrozenOracle& o,
                            const Vec& x, double lambda, double sigma_hat,
                            CostCounters* counters, const AnsOptions& opts) {
  const std::size_t d = p.dim();
  const Vec grad = p.grad_g(x);
  count_grad(p, counters);
  if (nrm2(grad) == 0.0) return stationary_certificate(x, grad);

  const DenseSymMatrix H = o.evaluate(x);
  const Vec b = scaled(grad, -lambda);

  Vec s;
  int inner = 0;
  if (!opts.use_cg) {
    DenseSymMatrix M = H;
    M.scale(lambda);
    M.add_shift(1.0);
    SolveCertificate sc = cholesky_solve(M, b);
    s = std::move(sc.solution);
    inner = sc.iterations;
  } else {
    // matrix-free route with the shrinking tolerance schedule: ask for
    // residual <= sigma_hat/2 * ||s_current|| and re-check on the certificate
    auto apply = [&](const Vec& v) {
      Vec w = H.matvec(v);
      for (std::size_t i = 0; i < d; ++i) w[i] = lambda * w[i] + v[i];
      return w;
    };
    const double bnorm = nrm2(b);
    double tol = 0.1;
    for (int round = 0;; ++round) {
      SolveCertificate sc = cg_solve(apply, b, tol, 10 * static_cast<int>(d) + 50);
      s = std::move(sc.solution);
      inner += sc.iterations;
      const double snorm = nrm2(s);
      if (snorm > 0.0 && sc.residual_norm <= 0.5 * sigma_hat * snorm) break;
      if (round >= opts.max_refinements)
        throw InnerSolveStalled("solve_ans: cg tolerance schedule exhausted");
      // aim at residual <= sigma_hat/2 * ||s||, with a safety halving
      tol = std::max(0.25 * sigma_hat * std::max(snorm, 1e-300) / bnorm, 1e-15);
    }
  }

  AnsCertificate cert;
  cert.y = vadd(x, s);
  const Vec hs = H.matvec(s);
  cert.u = vadd(grad, hs);
  cert.model_grad_y = cert.u;
  cert.eps = 0.0;
  cert.step_norm = nrm2(s);
  cert.lhs = certificate_lhs(lambda, cert.u, cert.y, x, cert.eps);
  cert.rhs = sigma_hat * sigma_hat * cert.step_norm * cert.step_norm;
  cert.inner_iterations = inner;

  for (int r = 0; cert.lhs > cert.rhs; ++r) {
    if (r >= opts.max_refinements)
      throw InnerSolveStalled(
          "solve_ans: certificate unreachable after refinement, lhs=" +
          std::to_string(cert.lhs) + " rhs=" + std::to_string(cert.rhs));
    // refine against the recomputed residual r = lambda u + y - x
    Vec resid(d);
    for (std::size_t i = 0; i < d; ++i)
      resid[i] = lambda * cert.u[i] + cert.y[i] - x[i];
    DenseSymMatrix M = H;
    M.scale(lambda);
    M.add_shift(1.0);
    const Vec ds = cholesky_solve(M, resid).solution;
    for (std::size_t i = 0; i < d; ++i) s[i] -= ds[i];
    cert.y = vadd(x, s);
    const Vec hs2 = H.matvec(s);
    cert.u = vadd(grad, hs2);
    cert.model_grad_y = cert.u;
    cert.step_norm = nrm2(s);
    cert.lhs = certificate_lhs(lambda, cert.u, cert.y, x, cert.eps);
    cert.rhs = sigma_hat * sigma_hat * cert.step_norm * cert.step_norm;
    ++cert.inner_iterations;
  }
  return cert;
}

// Composite path: accelerated proximal gradient on the strongly convex
// subproblem, with the subgradient of h read off the prox step. eps stays 0.
AnsCertificate solve_composite(const CompositeProblem& p,
                               const FrozenOracle& o, const Vec& x,
                               double lambda, double sigma_hat,
                               CostCounters* counters, const AnsOptions& opts) {
  const std::size_t d = p.dim();
  const Vec grad = p.grad_g(x);
  count_grad(p, counters);
  const DenseSymMatrix H = o.evaluate(x);

  // smooth part psi(u) = <grad, u-x> + (u-x)^T H (u-x)/2 + ||u-x||^2/(2 lambda)
  const double hnorm = spectral_norm_upper(H, 100);
  const double lips = hnorm + 1.0 / lambda;
  const double mu = 1.0 / lambda;
  const double q = mu / lips;
  const double beta = (1.0 - std::sqrt(q)) / (1.0 + std::sqrt(q));
  const double tau = 1.0 / lips;

  auto smooth_grad = [&](const Vec& u) {
    const Vec du = vsub(u, x);
    Vec gg = H.matvec(du);
    for (std::size_t i = 0; i < d; ++i) gg[i] += grad[i] + du[i] / lambda;
    return gg;
  };

  Vec u_prev = x;
  Vec w = x;
  AnsCertificate cert;
  for (int it = 1; it <= opts.max_inner; ++it) {
    const Vec gw = smooth_grad(w);
    Vec z(d);
    for (std::size_t i = 0; i < d; ++i) z[i] = w[i] - tau * gw[i];
    Vec u = p.prox_h(z, tau);
    const Vec s = p.subgrad_from_prox(z, tau, u);

    // candidate certificate at u
    const Vec du = vsub(u, x);
    Vec model_grad = H.matvec(du);
    for (std::size_t i = 0; i < d; ++i) model_grad[i] += grad[i];
    Vec ucand(d);
    for (std::size_t i = 0; i < d; ++i) ucand[i] = model_grad[i] + s[i];

    const double step = nrm2(du);
    const double lhs = certificate_lhs(lambda, ucand, u, x, 0.0);
    const double rhs = sigma_hat * sigma_hat * step * step;
    if (lhs <= rhs && (step > 0.0 || lhs == 0.0)) {
      cert.y = std::move(u);
      cert.u = std::move(ucand);
      cert.model_grad_y = std::move(model_grad);
      cert.eps = 0.0;
      cert.step_norm = step;
      cert.lhs = lhs;
      cert.rhs = rhs;
      cert.inner_iterations = it;
      cert.stationary = (step == 0.0);
      return cert;
    }
    Vec w_next(d);
    for (std::size_t i = 0; i < d; ++i)
      w_next[i] = u[i] + beta * (u[i] - u_prev[i]);
    u_prev = std::move(u);
    w = std::move(w_next);
  }
  throw InnerSolveStalled(
      "solve_ans: proximal gradient exceeded max_inner without certificate");
}

}  // namespace

AnsCertificate solve_ans(const CompositeProblem& p, const FrozenOracle& o,
                         const Vec& x, double lambda, double sigma_hat,
                         CostCounters* counters, const AnsOptions& opts) {
  if (!(lambda > 0.0)) throw InvalidTolerance("solve_ans: lambda > 0");
  if (!(sigma_hat > 0.0) || sigma_hat >= 1.0)
    throw InvalidTolerance("solve_ans: sigma_hat in (0,1)");
  if (x.size() != p.dim()) throw DimensionMismatch("solve_ans: x dim");
  if (counters) ++counters->ans_solves;
  if (p.h().is_zero())
    return solve_smooth(p, o, x, lambda, sigma_hat, counters, opts);
  return solve_composite(p, o, x, lambda, sigma_hat, counters, opts);
}

bool SigmaCertificate::holds(double rel_tol) const {
  const double scale1 = std::max(rhs, step_norm * step_norm);
  if (lhs > rhs + rel_tol * std::max(scale1, 1e-300)) return false;
  if (v_norm > v_bound + rel_tol * std::max(v_bound, 1e-300)) return false;
  if (eps > eps_bound + rel_tol * std::max(eps_bound, 1e-300)) return false;
  return true;
}

SigmaCertificate to_sigma_certificate(const CompositeProblem& p,
                                      const AnsCertificate& cert, const Vec& x,
                                      double lambda, double sigma_hat,
                                      double delta_for_bounds,
                                      CostCounters* counters, bool enforce,
                                      double rel_tol) {
  SigmaCertificate out;
  out.y = cert.y;
  out.eps = cert.eps;
  out.step_norm = cert.step_norm;
  out.sigma_hat = sigma_hat;
  out.lambda_delta = lambda * delta_for_bounds;
  out.curvature = 0.5 * p.L2() * lambda * cert.step_norm;

  // v = grad g(y) + u - model gradient at y (true gradient correction)
  const Vec grad_y = p.grad_g(cert.y);
  if (counters)
    counters->grad_component_evals += std::max<std::size_t>(p.num_components(), 1);
  out.v.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.v[i] = grad_y[i] + cert.u[i] - cert.model_grad_y[i];
  out.v_norm = nrm2(out.v);

  const double s = out.sigma_total();
  out.lhs = [&] {
    const double r = std::sqrt(pairwise_sum(x.size(), [&](std::size_t i) {
      const double t = lambda * out.v[i] + cert.y[i] - x[i];
      return t * t;
    }));
    return r * r + 2.0 * lambda * cert.eps;
  }();
  out.rhs = s * s * cert.step_norm * cert.step_norm;
  out.v_bound = (1.0 + s) * cert.step_norm / lambda;
  out.eps_bound =
      sigma_hat * sigma_hat * cert.step_norm * cert.step_norm / (2.0 * lambda);

  if (enforce && !cert.stationary && !out.holds(rel_tol))
    throw CertificateViolation(
        "to_sigma_certificate: converted bounds fail (oracle error likely "
        "exceeds delta); lhs=" +
        std::to_string(out.lhs) + " rhs=" + std::to_string(out.rhs) +
        " |v|=" + std::to_string(out.v_norm) +
        " vbound=" + std::to_string(out.v_bound));
  return out;
}

bool early_termination_check(const SigmaCertificate& cert, double rho_bar,
                             double eps_bar) {
  return cert.v_norm <= rho_bar && cert.eps <= eps_bar;
}

}  // namespace ianpe
