#pragma once

#include <functional>
#include <optional>

#include "ianpe/ans.hpp"

namespace ianpe {

// The continuous curve lambda -> x(lambda) searched over, with its smoothness
// constants: ||x(s)-x(t)|| <= min{ (M0/t)(s-t), M1 ||x(s)-x(0)|| } for t <= s.
struct Curve {
  std::function<Vec(double)> eval;
  Vec origin;        // limit of x(lambda) for lambda -> 0+
  double m0 = 0.0;   // may be unknown (0); only used for diagnostics
  double m1 = 1.0;
};

// Lambda(alpha): every stepsize above it forces lambda ||y - x|| > alpha as
// long as the certificates stay above the (v_bar, eps_bar) stopping levels.
double lambda_floor(double alpha, double v_bar, double eps_bar,
                    double sigma_hat, double C, double L2);

// Left bracketing point from the right one. gamma0 = M1 lambda+0 ||x+0-x(0)||.
double left_bracket(double lambda_plus0, double y_minus_x_norm, double gamma0,
                    double sigma_hat, double C, double L2, double alpha_minus);

enum class SearchStatus {
  Accepted,          // step length inside [alpha-, alpha+]
  EarlyTermination,  // certificate passed the (rho_bar, eps_bar) test
  GradStop           // smooth case: ||grad f(y)|| under the driver tolerance
};

struct BracketEntry {
  double lambda = 0.0;
  double step_length = 0.0;
  int side = 0;  // -1 below alpha-, 0 accepted, +1 above alpha+
  double width = 0.0;  // bracket width when this trial was evaluated
};

struct BisectionResult {
  SearchStatus status = SearchStatus::Accepted;
  double lambda = 0.0;
  Vec x_tilde;
  AnsCertificate cert;
  SigmaCertificate scert;
  double step_length = 0.0;
  int bisection_count = 0;
  int bracket_halvings = 0;
  std::vector<BracketEntry> history;
};

struct SearchParams {
  double alpha_minus = 0.0;
  double alpha_plus = 0.0;
  double sigma_hat = 0.1;
  double delta = 0.0;  // frozen oracle budget; lambda*delta <= C throughout
  double C = 0.1;
  double L2 = 0.0;
  double rho_bar = 1e-9;
  double eps_bar = 1e-9;
  double grad_stop_tol = 0.0;  // 0 disables the smooth-gradient early out
  int max_bisections = 64;
  bool enforce_lambda_delta = true;  // heuristic mode decouples the budget
  // when positive, probe this stepsize before the formula bracketing (warm
  // seeding with the previously accepted lambda)
  double warm_left = 0.0;
};

using AnsSolveFn = std::function<AnsCertificate(double lambda, const Vec& x)>;
using SigmaFn =
    std::function<SigmaCertificate(const AnsCertificate&, double lambda,
                                   const Vec& x)>;

// Bisection search over the curve. cert_plus0 is a valid ANS at
// (lambda_plus0, curve(lambda_plus0)) whose step length exceeds alpha_plus.
BisectionResult bisect(const Curve& curve, double lambda_plus0,
                       const AnsCertificate& cert_plus0,
                       const SearchParams& params, const AnsSolveFn& solve,
                       const SigmaFn& sigma);

// Oracle-call bound of the bisection stage, for logging: needs the distance
// d(x+0) to a solution and the curve constant M0.
double bisection_count_bound(double lambda_plus0, double dist_x_plus0,
                             double gamma0, double m0, double lh,
                             const SearchParams& params);

}  // namespace ianpe
