#include "ianpe/linesearch.hpp"

#include <cmath>
#include <string>

namespace ianpe {

double lambda_floor(double alpha, double v_bar, double eps_bar,
                    double sigma_hat, double C, double L2) {
  if (!(alpha > 0.0) || !(v_bar > 0.0) || !(eps_bar > 0.0))
    throw InvalidTolerance("lambda_floor: alpha, v_bar, eps_bar > 0");
  const double first =
      std::sqrt(alpha / v_bar * (1.0 + sigma_hat + C + 0.5 * L2 * alpha));
  const double second =
      std::cbrt(sigma_hat * sigma_hat * alpha * alpha / (2.0 * eps_bar));
  return std::max(first, second);
}

double left_bracket(double lambda_plus0, double y_minus_x_norm, double gamma0,
                    double sigma_hat, double C, double L2,
                    double alpha_minus) {
  const double denom =
      (1.0 + sigma_hat) * (1.0 + 2.0 * L2 * gamma0) * lambda_plus0 *
          y_minus_x_norm +
      (1.0 + 2.0 * C) * gamma0 + L2 * gamma0 * gamma0;
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw DegenerateBracket("left_bracket: denominator underflow (y = x?)");
  return (1.0 - sigma_hat) * alpha_minus * lambda_plus0 / denom;
}

namespace {

int classify(double step, double alpha_minus, double alpha_plus) {
  if (step > alpha_plus) return +1;
  if (step < alpha_minus) return -1;
  return 0;  // closed-interval acceptance
}

}  // namespace

BisectionResult bisect(const Curve& curve, double lambda_plus0,
                       const AnsCertificate& cert_plus0,
                       const SearchParams& params, const AnsSolveFn& solve,
                       const SigmaFn& sigma) {
  if (!(params.alpha_minus * (1.0 + params.sigma_hat) <
        params.alpha_plus * (1.0 - params.sigma_hat)))
    throw ConfigError("bisect: alpha-(1+sigma^) < alpha+(1-sigma^) required");
  if (params.enforce_lambda_delta &&
      lambda_plus0 * params.delta > params.C * (1.0 + 1e-12))
    throw ConfigError("bisect: lambda+0 * delta exceeds C");

  BisectionResult out;
  double last_step = 0.0;
  double current_width = 0.0;

  // The sigma certificate needs the true gradient at the trial point, so it
  // is only formed where the result is consumed: at stationary trials and at
  // accepted steps. Rejected trials are classified by step length alone.
  auto probe = [&](double lambda, bool record) -> std::optional<BisectionResult> {
    const Vec x = curve.eval(lambda);
    AnsCertificate cert = solve(lambda, x);
    const double step = lambda * cert.step_norm;
    if (record)
      out.history.push_back(
          {lambda, step, classify(step, params.alpha_minus, params.alpha_plus),
           current_width});
    const bool accepted =
        classify(step, params.alpha_minus, params.alpha_plus) == 0;
    if (!accepted && !cert.stationary) {
      last_step = step;
      return std::nullopt;
    }
    SigmaCertificate scert = sigma(cert, lambda, x);
    BisectionResult res = out;
    if (cert.stationary ||
        early_termination_check(scert, params.rho_bar, params.eps_bar))
      res.status = SearchStatus::EarlyTermination;
    else if (params.grad_stop_tol > 0.0 && scert.v_norm < params.grad_stop_tol)
      res.status = SearchStatus::GradStop;
    else
      res.status = SearchStatus::Accepted;
    res.lambda = lambda;
    res.x_tilde = x;
    res.cert = std::move(cert);
    res.scert = std::move(scert);
    res.step_length = step;
    return res;
  };

  // --- bracketing stage ---
  const double step_plus0 = lambda_plus0 * cert_plus0.step_norm;
  if (step_plus0 <= params.alpha_plus)
    throw InvalidBracket("bisect: right bracket step not above alpha+");

  double lambda_plus = lambda_plus0;
  // warm seeding: the previously accepted stepsize usually brackets or
  // accepts outright, skipping the formula probe
  bool have_left = false;
  double lambda_minus0 = 0.0;
  if (params.warm_left > 0.0 && params.warm_left < lambda_plus) {
    current_width = lambda_plus - params.warm_left;
    auto res = probe(params.warm_left, true);
    if (res) return *res;
    const int side =
        classify(last_step, params.alpha_minus, params.alpha_plus);
    if (side < 0) {
      lambda_minus0 = params.warm_left;
      have_left = true;
    } else {
      lambda_plus = params.warm_left;  // still above the window: tighter right
    }
  }
  if (!have_left) {
    const double gamma0 = curve.m1 * lambda_plus0 *
                          nrm2_diff(curve.eval(lambda_plus0), curve.origin);
    lambda_minus0 =
        left_bracket(lambda_plus0, cert_plus0.step_norm, gamma0,
                     params.sigma_hat, params.C, params.L2, params.alpha_minus);
    lambda_minus0 = std::min(lambda_minus0, 0.5 * lambda_plus);
  }

  // the theory puts the left step under alpha-; when the frozen oracle broke
  // its error budget the assertion can fail, in which case halve and log
  while (!have_left) {
    current_width = lambda_plus - lambda_minus0;
    auto res = probe(lambda_minus0, true);
    if (res) return *res;
    const int side =
        classify(last_step, params.alpha_minus, params.alpha_plus);
    if (side < 0) break;
    ++out.bracket_halvings;
    if (out.bracket_halvings > 60)
      throw BracketExhausted(
          "bisect: left bracketing point never fell below alpha-");
    lambda_minus0 *= 0.5;
  }

  // --- bisection stage ---
  // interval kept as (lo, width) so widths halve exactly
  double lo = lambda_minus0;
  double width = lambda_plus - lambda_minus0;
  for (int j = 1; j <= params.max_bisections; ++j) {
    width *= 0.5;
    current_width = width;
    const double mid = lo + width;
    out.bisection_count = j;
    auto res = probe(mid, true);
    if (res) {
      res->bisection_count = j;
      return *res;
    }
    const int side =
        classify(last_step, params.alpha_minus, params.alpha_plus);
    if (side > 0) {
      // mid becomes the right endpoint: keep lo
    } else {
      lo = mid;
    }
  }
  throw BracketExhausted(
      "bisect: no acceptable step within " +
      std::to_string(params.max_bisections) +
      " halvings (oracle error breached delta or curve contract violated)");
}

double bisection_count_bound(double lambda_plus0, double dist_x_plus0,
                             double gamma0, double m0, double lh,
                             const SearchParams& params) {
  const double sh = params.sigma_hat;
  const double C = params.C;
  const double L2 = params.L2;
  const double am = params.alpha_minus;
  const double ap = params.alpha_plus;
  const double num_c0 =
      (1.0 + sh) * (1.0 + 2.0 * L2 * gamma0) *
          (2.0 * lh * lambda_plus0 * lambda_plus0 +
           lambda_plus0 * dist_x_plus0 +
           lambda_plus0 * lambda_plus0 * L2 * dist_x_plus0 * dist_x_plus0) +
      ((1.0 + 2.0 * C) * gamma0 + L2 * gamma0 * gamma0) * (1.0 - C) * (1.0 - sh);
  const double c0 = num_c0 / ((1.0 - C) * (1.0 - sh) * (1.0 - sh) * am);
  const double m0l = m0 * lambda_plus0;
  const double inner = 1.0 + 2.0 * C + L2 * m0l +
                       2.0 * (L2 + 1.0 / std::max(m0l, 1e-300)) * (1.0 + sh) * am;
  const double ratio = inner / ((1.0 - sh) * ap - (1.0 + sh) * am);
  return 2.0 + std::log2(std::max(c0 * c0 * m0 * lambda_plus0 * ratio, 1.0));
}

}  // namespace ianpe
