#pragma once

#include "ianpe/oracle.hpp"
#include "ianpe/problem.hpp"

namespace ianpe {

// Certified approximate solution of the lambda-proximal quadratic subproblem
//   min_u  g(x) + <grad g(x), u-x> + (u-x)^T H (u-x)/2 + h(u) + ||u-x||^2/(2 lambda)
// witnessing  ||lambda u + y - x||^2 + 2 lambda eps <= sigma_hat^2 ||y - x||^2
// with u in (grad model + subdiff h)(y).
struct AnsCertificate {
  Vec y;
  Vec u;
  double eps = 0.0;
  double lhs = 0.0;  // ||lambda u + y - x||^2 + 2 lambda eps
  double rhs = 0.0;  // sigma_hat^2 ||y - x||^2
  double step_norm = 0.0;  // ||y - x||
  Vec model_grad_y;        // grad g(x) + H(x)(y - x)
  int inner_iterations = 0;
  bool stationary = false;
};

// The same certificate restated against the exact linearization via the
// extragradient correction v = grad g(y) + u - model_grad_y, together with
// the numeric values of all three converted bounds.
struct SigmaCertificate {
  Vec y;
  Vec v;
  double eps = 0.0;
  double v_norm = 0.0;
  double step_norm = 0.0;

  // bound pieces: sigma_hat + lambda*delta + L2*lambda*||y-x||/2
  double sigma_hat = 0.0;
  double lambda_delta = 0.0;
  double curvature = 0.0;
  double sigma_total() const { return sigma_hat + lambda_delta + curvature; }

  double lhs = 0.0;        // ||lambda v + y - x||^2 + 2 lambda eps
  double rhs = 0.0;        // sigma_total^2 ||y-x||^2
  double v_bound = 0.0;    // (1 + sigma_total) ||y-x|| / lambda
  double eps_bound = 0.0;  // sigma_hat^2 ||y-x||^2 / (2 lambda)

  bool holds(double rel_tol = 1e-9) const;
};

struct AnsOptions {
  bool use_cg = false;       // matrix-free route instead of Cholesky
  int max_inner = 200000;    // prox-gradient cap for nonsmooth h
  int max_refinements = 4;
};

// Solve the subproblem at (lambda, x) with the frozen oracle to relative
// accuracy sigma_hat. h = 0 goes through a certified linear solve; general h
// runs accelerated proximal gradient with subgradients extracted from prox.
AnsCertificate solve_ans(const CompositeProblem& p, const FrozenOracle& o,
                         const Vec& x, double lambda, double sigma_hat,
                         CostCounters* counters = nullptr,
                         const AnsOptions& opts = {});

// Convert to the exact-linearization certificate. delta_for_bounds is the
// oracle error used in the bound (declared budget, or a measured value).
// When enforce is set, a bound failing by more than rel_tol relative raises
// CertificateViolation.
SigmaCertificate to_sigma_certificate(const CompositeProblem& p,
                                      const AnsCertificate& cert, const Vec& x,
                                      double lambda, double sigma_hat,
                                      double delta_for_bounds,
                                      CostCounters* counters = nullptr,
                                      bool enforce = true,
                                      double rel_tol = 1e-9);

// Remark-style stopping test: ||v|| <= rho_bar and eps <= eps_bar (closed).
bool early_termination_check(const SigmaCertificate& cert, double rho_bar,
                             double eps_bar);

}  // namespace ianpe
