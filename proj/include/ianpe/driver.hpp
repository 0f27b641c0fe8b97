#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ianpe/io.hpp"
#include "ianpe/linesearch.hpp"
#include "ianpe/oracle.hpp"

namespace ianpe {

enum class RunMode { IanpeStrict, IanpeHeuristic, GrNewton };
std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

enum class StopReason { GradTol, EarlyCertificate, MaxOuter, Stationary };
std::string to_string(StopReason r);

struct IanpeConfig {
  double C = 0.1;
  double gamma = 2.0;
  double delta_init = -1.0;  // delta_{-1}; negative resolves to delta_max/2^10
  double delta_max = -1.0;   // negative resolves to L1 of the problem
  double sigma_l = 0.1;
  double sigma_u = 0.5;
  double sigma_hat = 0.1;
  double rho_bar = 1e-9;
  double eps_bar = 1e-9;
  double grad_tol = 1e-7;
  int max_outer = 200;
  RunMode mode = RunMode::IanpeStrict;

  // heuristic block (mode == IanpeHeuristic)
  double sigma0 = 0.9;
  double sigma_lo = 0.7;
  double sigma_hi = 0.95;
  int search_threshold = 2;
  double warm_factor = 2.0;
  int switch_after = 40;
  double progress_cutoff = 0.1;
  // sampling floor: delta_k never drops below this fraction of delta_max in
  // the heuristic accelerated phase (keeps sub-samples economical)
  double heuristic_delta_floor_frac = 0.25;

  OracleConfig oracle;
  std::uint64_t seed = 0;
  bool keep_diagnostics = false;

  // sigma~ = C + sigma_u + sigma_hat, the strict-mode certificate level
  double sigma_tilde() const { return C + sigma_u + sigma_hat; }
  void validate() const;  // throws ConfigError
  std::string to_json() const;
};

// a_{k+1} = (lambda + sqrt(lambda^2 + 4 lambda A)) / 2
double accel_weight(double lambda, double A);

// x~ = A/(A+a) y + a/(A+a) x; the line-search curve of one outer iteration
Vec tilde_x(double A, const Vec& y, const Vec& x, double lambda);
Curve make_curve(double A, const Vec& y, const Vec& x);

// Per-iteration detail retained for the acceptance checks.
struct IterationDiag {
  std::int64_t iter = 0;
  double lambda = 0.0;
  double step_length = 0.0;
  double a = 0.0;
  double A_next = 0.0;
  int while_count = 0;
  int bisection_count = 0;
  double sigma_lhs = 0.0;   // ||lambda v + y~ - x~||^2 + 2 lambda eps
  double step_norm = 0.0;   // ||y~ - x~||
  double v_norm = 0.0;
  double v_bound = 0.0;
  double eps = 0.0;
  double eps_bound = 0.0;
  double lambda_delta = 0.0;  // lambda * delta at acceptance
  Vec x_next, y_next;
  double f_y = 0.0;
  // right-bracket data when a bisection ran (count-bound diagnostics)
  double lambda_plus0 = 0.0;
  double gamma0 = 0.0;
  Vec x_plus0;
};

struct RunResult {
  Vec y;
  double f = 0.0;
  double grad_norm = 0.0;
  StopReason reason = StopReason::MaxOuter;
  int iterations = 0;
  std::vector<TraceRecord> trace;
  std::vector<IterationDiag> diags;
  CostCounters counters;
};

// One gradient-regularized Newton step: solves
// (H(y) + lambda I)(x - y) = -grad f(y) with lambda = ||grad f(y)||^{3/2}.
Vec gr_newton_step(const CompositeProblem& p, const FrozenOracle& o,
                   const Vec& y, CostCounters* counters = nullptr);

// Heuristic controller: threshold rule on the search length.
struct AdaptiveDecision {
  double sigma_k = 0.0;
  double lambda_warm = 0.0;
  bool redo = false;
};
AdaptiveDecision adaptive_update(int search_length, int threshold,
                                 double sigma_k, double sigma_lo,
                                 double sigma_hi, double warm_factor,
                                 double lambda_accepted);

RunResult solve_ianpe(const CompositeProblem& p, const Vec& x0,
                      const IanpeConfig& cfg);

}  // namespace ianpe
