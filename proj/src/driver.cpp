#include "ianpe/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

namespace ianpe {

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::IanpeStrict:
      return "ianpe-strict";
    case RunMode::IanpeHeuristic:
      return "ianpe";
    case RunMode::GrNewton:
      return "gr-newton";
  }
  return "ianpe";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "ianpe") return RunMode::IanpeHeuristic;
  if (s == "ianpe-strict") return RunMode::IanpeStrict;
  if (s == "gr-newton") return RunMode::GrNewton;
  throw ConfigError("unknown mode: " + s);
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::GradTol:
      return "grad_tol";
    case StopReason::EarlyCertificate:
      return "early_certificate";
    case StopReason::MaxOuter:
      return "max_outer";
    case StopReason::Stationary:
      return "stationary";
  }
  return "max_outer";
}

void IanpeConfig::validate() const {
  if (!(C > 0.0)) throw ConfigError("C > 0 required");
  if (!(gamma > 1.0)) throw ConfigError("gamma > 1 required");
  if (!(sigma_hat > 0.0 && sigma_hat < 1.0))
    throw ConfigError("sigma_hat in (0,1)");
  if (!(sigma_l > 0.0 && sigma_l < sigma_u && sigma_u < 1.0))
    throw ConfigError("0 < sigma_l < sigma_u < 1 required");
  if (!(grad_tol > 0.0) || !(rho_bar > 0.0) || !(eps_bar > 0.0))
    throw ConfigError("tolerances must be positive");
  if (max_outer < 1) throw ConfigError("max_outer >= 1");
  if (mode == RunMode::IanpeStrict) {
    if (!(sigma_hat + sigma_u < 1.0))
      throw ConfigError("sigma_hat + sigma_u < 1 required");
    if (!(sigma_l * (1.0 + sigma_hat) < sigma_u * (1.0 - sigma_hat)))
      throw ConfigError("sigma_l(1+sigma^) < sigma_u(1-sigma^) required");
    if (!(sigma_tilde() < 1.0))
      throw ConfigError("C + sigma_u + sigma_hat < 1 required");
  }
  if (mode == RunMode::IanpeHeuristic) {
    if (!(sigma_lo > 0.0 && sigma_lo < sigma_hi && sigma_hi < 1.0))
      throw ConfigError("0 < sigma_lo < sigma_hi < 1 required");
    if (!(sigma0 >= sigma_lo && sigma0 <= sigma_hi))
      throw ConfigError("sigma0 must lie in [sigma_lo, sigma_hi]");
    if (!(sigma_l * (1.0 + sigma_hat) < sigma_lo * (1.0 - sigma_hat)))
      throw ConfigError("sigma_l(1+sigma^) < sigma_lo(1-sigma^) required");
    if (!(warm_factor > 1.0)) throw ConfigError("warm_factor > 1");
    if (search_threshold < 0 || switch_after < 0)
      throw ConfigError("threshold and switch_after must be nonnegative");
    if (!(progress_cutoff > 0.0)) throw ConfigError("progress_cutoff > 0");
  }
  if (delta_max > 0.0 && delta_init > 0.0 && !(delta_init < delta_max))
    throw ConfigError("delta_init < delta_max required");
}

std::string IanpeConfig::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["C"] = C;
  j["gamma"] = gamma;
  j["delta_init"] = delta_init;
  j["delta_max"] = delta_max;
  j["sigma_l"] = sigma_l;
  j["sigma_u"] = sigma_u;
  j["sigma_hat"] = sigma_hat;
  j["rho_bar"] = rho_bar;
  j["eps_bar"] = eps_bar;
  j["grad_tol"] = grad_tol;
  j["max_outer"] = max_outer;
  j["sigma0"] = sigma0;
  j["sigma_lo"] = sigma_lo;
  j["sigma_hi"] = sigma_hi;
  j["search_threshold"] = search_threshold;
  j["warm_factor"] = warm_factor;
  j["switch_after"] = switch_after;
  j["progress_cutoff"] = progress_cutoff;
  j["oracle"] = to_string(oracle.kind);
  j["oracle_failure_budget"] = oracle.failure_budget;
  j["oracle_points_budget"] = oracle.points_budget;
  j["oracle_sketch_dim"] = oracle.sketch_dim;
  if (oracle.kind == OracleKind::Sketch) j["sketch_heuristic"] = true;
  j["seed"] = seed;
  return j.dump();
}

double accel_weight(double lambda, double A) {
  return 0.5 * (lambda + std::sqrt(lambda * lambda + 4.0 * lambda * A));
}

Vec tilde_x(double A, const Vec& y, const Vec& x, double lambda) {
  const double a = accel_weight(lambda, A);
  const double total = A + a;
  return lincomb(A / total, y, a / total, x);
}

Curve make_curve(double A, const Vec& y, const Vec& x) {
  Curve c;
  c.eval = [A, &y, &x](double lambda) { return tilde_x(A, y, x, lambda); };
  c.origin = A > 0.0 ? y : x;
  c.m1 = 1.0;
  return c;
}

Vec gr_newton_step(const CompositeProblem& p, const FrozenOracle& o,
                   const Vec& y, CostCounters* counters) {
  if (!p.h().is_zero())
    throw ConfigError("gr_newton_step: smooth objectives only");
  const Vec grad = p.grad_g(y);
  if (counters) {
    counters->grad_component_evals += std::max<std::size_t>(p.num_components(), 1);
    ++counters->ans_solves;
  }
  const double gn = nrm2(grad);
  if (gn == 0.0) return y;
  const double lambda = std::pow(gn, 1.5);
  DenseSymMatrix M = o.evaluate(y);
  M.add_shift(lambda);
  const Vec s = cholesky_solve(M, scaled(grad, -1.0)).solution;
  return vadd(y, s);
}

AdaptiveDecision adaptive_update(int search_length, int threshold,
                                 double sigma_k, double sigma_lo,
                                 double sigma_hi, double warm_factor,
                                 double lambda_accepted) {
  AdaptiveDecision d;
  if (search_length <= threshold) {
    d.sigma_k = std::max(sigma_lo, sigma_k * 0.95);
    d.lambda_warm = warm_factor * lambda_accepted;
    d.redo = false;
  } else {
    d.sigma_k = std::min(sigma_hi, sigma_k / 0.95);
    d.lambda_warm = lambda_accepted;
    d.redo = d.sigma_k > sigma_k;
  }
  return d;
}

// ---------------------------------------------------------------------------

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::uint64_t nanos() const {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - start_)
            .count());
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct SearchOutcome {
  BisectionResult result;
  double delta_k = 0.0;
  int while_count = 0;
  std::uint32_t redraws = 0;
  std::size_t sample_size = 0;
  // right-bracket data when the bisection stage ran (for the count bound)
  double lambda_plus0 = 0.0;
  double gamma0 = 0.0;
  Vec x_plus0;
};

class Driver {
 public:
  Driver(const CompositeProblem& p, const Vec& x0, IanpeConfig cfg)
      : p_(p), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (x0.size() != p.dim()) throw DimensionMismatch("solve_ianpe: x0 dim");
    if (cfg_.delta_max <= 0.0) cfg_.delta_max = std::max(p.L1(), 1e-12);
    if (cfg_.delta_init <= 0.0) cfg_.delta_init = cfg_.delta_max / 1024.0;
    if (!(cfg_.delta_init < cfg_.delta_max))
      throw ConfigError("delta_init < delta_max required");
    cfg_.oracle.seed = cfg_.seed;
    cfg_.oracle.delta_target = cfg_.delta_init;

    x_ = x0;
    y_ = x0;
    f_y_ = refresh_gradient(y_);
    delta_prev_ = cfg_.delta_init;
    sigma_k_ = cfg_.sigma0;
    lambda_warm_ = cfg_.C / cfg_.delta_max;
    mode_ = cfg_.mode;
  }

  RunResult run();

 private:
  double refresh_gradient(const Vec& at) {
    const double f = p_.value_and_grad(at, grad_y_);
    counters_.grad_component_evals +=
        std::max<std::size_t>(p_.num_components(), 1);
    grad_norm_y_ = nrm2(grad_y_);
    return f;
  }

  // grad-norm termination only applies to smooth objectives
  bool grad_stop() const {
    return p_.h().is_zero() && grad_norm_y_ < cfg_.grad_tol;
  }

  std::unique_ptr<FrozenOracle> freeze(double delta_k, const Vec& anchor) {
    return freeze_oracle(p_, cfg_.oracle, static_cast<std::uint64_t>(iter_),
                         redraw_count_++, delta_k, anchor);
  }

  double while_cap(double alpha_minus) const {
    if (!(p_.L2() > 0.0) || !std::isfinite(alpha_minus)) return 64.0;
    const double floor = lambda_floor(alpha_minus, cfg_.rho_bar, cfg_.eps_bar,
                                      cfg_.sigma_hat, cfg_.C, p_.L2());
    const double bound =
        std::log(cfg_.delta_max * floor / cfg_.C) / std::log(cfg_.gamma);
    return std::max(64.0, std::ceil(bound) + 2.0);
  }

  SearchOutcome search(double sigma_window_u);
  SearchOutcome search_once(double sigma_window_u);
  void accel_iteration();
  void gr_iteration();
  void push_trace(const std::string& mode, double lambda, double delta,
                  double step_length, int bisections, int whiles,
                  std::size_t sample_size);

  const CompositeProblem& p_;
  IanpeConfig cfg_;

  Vec x_, y_, grad_y_;
  double f_y_ = 0.0, grad_norm_y_ = 0.0;
  double A_ = 0.0;
  double delta_prev_ = 0.0;
  double lambda_warm_ = 0.0;
  double sigma_k_ = 0.0;
  RunMode mode_ = RunMode::IanpeStrict;
  int iter_ = 0;
  int accel_count_ = 0;
  std::uint32_t redraw_count_ = 0;
  CostCounters counters_;
  Stopwatch watch_;

  RunResult out_;
  bool stopped_ = false;
  StopReason reason_ = StopReason::MaxOuter;
};

void Driver::push_trace(const std::string& mode, double lambda, double delta,
                        double step_length, int bisections, int whiles,
                        std::size_t sample_size) {
  TraceRecord r;
  r.iter = iter_;
  r.mode = mode;
  // the sketch oracle has no Lipschitz guarantee for its operator family
  if (cfg_.oracle.kind == OracleKind::Sketch) r.mode += "-sketch-heuristic";
  r.f = f_y_;
  r.grad_norm = p_.h().is_zero() ? grad_norm_y_ : 0.0;
  r.lambda = lambda;
  r.delta = delta;
  r.step_length = step_length;
  r.bisection_count = bisections;
  r.while_count = whiles;
  r.oracle_calls = counters_.ans_solves;
  r.data_passes = counters_.data_passes(p_.num_components());
  r.wall_nanos = watch_.nanos();
  r.sigma_k = mode_ == RunMode::IanpeHeuristic ? sigma_k_ : cfg_.sigma_u;
  r.sample_size = sample_size;
  out_.trace.push_back(std::move(r));
}

// One line-search pass: warm ANS, the delta-shrinking while loop, then
// bisection when the step overshoots. sigma_window_u is sigma_u in strict
// mode and the adaptive sigma_k in heuristic mode. Sketch oracles get the
// dimension-doubling retry when the bracketing falls apart.
SearchOutcome Driver::search(double sigma_window_u) {
  for (;;) {
    try {
      return search_once(sigma_window_u);
    } catch (const BracketExhausted&) {
      if (cfg_.oracle.kind != OracleKind::Sketch ||
          2 * cfg_.oracle.sketch_dim > p_.num_components())
        throw;
      cfg_.oracle.sketch_dim *= 2;
    }
  }
}

SearchOutcome Driver::search_once(double sigma_window_u) {
  const double L2 = p_.L2();
  const double alpha_minus = 2.0 * cfg_.sigma_l / L2;  // +inf when L2 == 0
  const double alpha_plus = 2.0 * sigma_window_u / L2;

  SearchOutcome so;
  double delta_k;
  double lambda;
  const bool heuristic = mode_ == RunMode::IanpeHeuristic;
  if (heuristic) {
    // the warm start wins: lambda decouples from delta, which is clamped
    // into its sampling band
    double lo = cfg_.C / 1e12;
    if (cfg_.oracle.kind == OracleKind::SubSample)
      lo = std::max(lo, cfg_.heuristic_delta_floor_frac * cfg_.delta_max);
    delta_k = std::clamp(cfg_.C / lambda_warm_, lo, cfg_.delta_max);
    lambda = lambda_warm_;
  } else {
    delta_k = std::min(cfg_.gamma * delta_prev_, cfg_.delta_max);
    lambda = cfg_.C / delta_k;
  }

  Curve curve = make_curve(A_, y_, x_);
  Vec xt = curve.eval(lambda);
  auto oracle = freeze(delta_k, xt);

  const bool enforce = mode_ == RunMode::IanpeStrict;
  const double grad_stop_tol = p_.h().is_zero() ? cfg_.grad_tol : 0.0;
  auto bounds_delta = [&]() {
    return cfg_.oracle.kind == OracleKind::Exact ? 0.0 : delta_k;
  };

  auto solve = [&](double lam, const Vec& at) {
    if (!heuristic && lam * delta_k > cfg_.C * (1.0 + 1e-9))
      throw NumericalFailure("search: lambda*delta exceeded C");
    return solve_ans(p_, *oracle, at, lam, cfg_.sigma_hat, &counters_);
  };
  auto sigma = [&](const AnsCertificate& cert, double lam, const Vec& at) {
    return to_sigma_certificate(p_, cert, at, lam, cfg_.sigma_hat,
                                bounds_delta(), &counters_, enforce);
  };

  auto finish = [&](SearchStatus status, double lam, Vec at,
                    AnsCertificate cert, SigmaCertificate scert) {
    so.result.status = status;
    so.result.lambda = lam;
    so.result.x_tilde = std::move(at);
    so.result.step_length = lam * cert.step_norm;
    so.result.cert = std::move(cert);
    so.result.scert = std::move(scert);
    so.delta_k = delta_k;
    so.sample_size = oracle->sample_size();
  };

  const double cap = while_cap(alpha_minus);
  for (;;) {
    AnsCertificate cert = solve(lambda, xt);
    SigmaCertificate scert = sigma(cert, lambda, xt);
    if (cert.stationary ||
        early_termination_check(scert, cfg_.rho_bar, cfg_.eps_bar)) {
      finish(SearchStatus::EarlyTermination, lambda, std::move(xt),
             std::move(cert), std::move(scert));
      return so;
    }
    if (grad_stop_tol > 0.0 && scert.v_norm < grad_stop_tol) {
      finish(SearchStatus::GradStop, lambda, std::move(xt), std::move(cert),
             std::move(scert));
      return so;
    }
    const double step = lambda * cert.step_norm;
    if (step < alpha_minus) {
      // too-short step: tighten the oracle and enlarge lambda
      ++so.while_count;
      if (so.while_count > cap)
        throw NumericalFailure(
            "search: while loop exceeded its certified bound");
      if (heuristic) {
        lambda *= cfg_.gamma;
        double lo = cfg_.C / 1e12;
        if (cfg_.oracle.kind == OracleKind::SubSample)
          lo = std::max(lo, cfg_.heuristic_delta_floor_frac * cfg_.delta_max);
        delta_k = std::clamp(cfg_.C / lambda, lo, cfg_.delta_max);
      } else {
        delta_k /= cfg_.gamma;
        lambda = cfg_.C / delta_k;
      }
      xt = curve.eval(lambda);
      oracle = freeze(delta_k, xt);
      ++so.redraws;
      continue;
    }
    if (step > alpha_plus) {
      SearchParams sp;
      sp.alpha_minus = alpha_minus;
      sp.alpha_plus = alpha_plus;
      sp.sigma_hat = cfg_.sigma_hat;
      sp.delta = delta_k;
      sp.C = cfg_.C;
      sp.L2 = L2;
      sp.rho_bar = cfg_.rho_bar;
      sp.eps_bar = cfg_.eps_bar;
      sp.grad_stop_tol = grad_stop_tol;
      sp.enforce_lambda_delta = !heuristic;
      if (heuristic) sp.warm_left = lambda / cfg_.warm_factor;
      so.lambda_plus0 = lambda;
      so.gamma0 = curve.m1 * lambda * nrm2_diff(xt, curve.origin);
      so.x_plus0 = xt;
      so.result = bisect(curve, lambda, cert, sp, solve, sigma);
      so.delta_k = delta_k;
      so.sample_size = oracle->sample_size();
      return so;
    }
    finish(SearchStatus::Accepted, lambda, std::move(xt), std::move(cert),
           std::move(scert));
    return so;
  }
}

void Driver::accel_iteration() {
  const double f_before = f_y_;
  SearchOutcome so;
  if (mode_ == RunMode::IanpeHeuristic) {
    int whiles_total = 0, bisections_total = 0;
    for (int round = 0;; ++round) {
      so = search(sigma_k_);
      whiles_total += so.while_count;
      bisections_total += so.result.bisection_count;
      if (so.result.status != SearchStatus::Accepted) break;
      const int len = so.while_count + so.result.bisection_count;
      const AdaptiveDecision dec = adaptive_update(
          len, cfg_.search_threshold, sigma_k_, cfg_.sigma_lo, cfg_.sigma_hi,
          cfg_.warm_factor, so.result.lambda);
      const bool redo = dec.redo && round < 8;
      sigma_k_ = dec.sigma_k;
      lambda_warm_ = dec.lambda_warm;
      if (!redo) break;
    }
    so.while_count = whiles_total;
    so.result.bisection_count = bisections_total;
  } else {
    so = search(cfg_.sigma_u);
  }

  const BisectionResult& br = so.result;

  if (br.status != SearchStatus::Accepted) {
    // Output the trial point directly; no extragradient update happens.
    const double f_tilde = p_.eval_f(br.cert.y);
    if (f_tilde <= f_y_) {
      y_ = br.cert.y;
      f_y_ = f_tilde;
      grad_y_ = br.scert.v;  // = grad f(y~) for smooth objectives
      grad_norm_y_ = br.scert.v_norm;
    }
    stopped_ = true;
    reason_ = br.status == SearchStatus::EarlyTermination
                  ? (br.cert.stationary ? StopReason::Stationary
                                        : StopReason::EarlyCertificate)
              : StopReason::GradTol;
    push_trace("stop", br.lambda, so.delta_k, br.step_length,
               br.bisection_count, so.while_count, so.sample_size);
    return;
  }

  // strict-mode recheck of the accepted step at the sigma~ level
  if (mode_ == RunMode::IanpeStrict) {
    const double st = cfg_.sigma_tilde();
    const double rhs =
        st * st * br.cert.step_norm * br.cert.step_norm;
    const double scale = std::max(rhs, br.cert.step_norm * br.cert.step_norm);
    if (br.scert.lhs > rhs + 1e-9 * std::max(scale, 1e-300))
      throw CertificateViolation(
          "accepted step fails the sigma~ certificate recheck");
  }

  const double lambda = br.lambda;
  const double a = accel_weight(lambda, A_);
  const double A_next = A_ + a;

  // y_{k+1}: pairwise argmin keeps the trace monotone
  const double f_tilde = p_.eval_f(br.cert.y);
  const bool take_tilde = f_tilde <= f_y_;
  if (take_tilde) {
    y_ = br.cert.y;
    f_y_ = f_tilde;
    grad_y_ = br.scert.v;
    grad_norm_y_ = br.scert.v_norm;
    if (!p_.h().is_zero()) {
      // v also carries the h subgradient; the smooth gradient norm is not
      // meaningful here, refresh only for the record
      grad_norm_y_ = br.scert.v_norm;
    }
  }

  // extragradient update
  axpy(-a, br.scert.v, x_);
  A_ = A_next;
  ++accel_count_;

  if (cfg_.keep_diagnostics) {
    IterationDiag d;
    d.iter = iter_;
    d.lambda = lambda;
    d.step_length = br.step_length;
    d.a = a;
    d.A_next = A_next;
    d.while_count = so.while_count;
    d.bisection_count = br.bisection_count;
    d.sigma_lhs = br.scert.lhs;
    d.step_norm = br.cert.step_norm;
    d.v_norm = br.scert.v_norm;
    d.v_bound = br.scert.v_bound;
    d.eps = br.scert.eps;
    d.eps_bound = br.scert.eps_bound;
    d.lambda_delta = lambda * so.delta_k;
    d.x_next = x_;
    d.y_next = y_;
    d.f_y = f_y_;
    d.lambda_plus0 = so.lambda_plus0;
    d.gamma0 = so.gamma0;
    d.x_plus0 = so.x_plus0;
    out_.diags.push_back(std::move(d));
  }

  delta_prev_ = so.delta_k;
  push_trace("accel", lambda, so.delta_k, br.step_length, br.bisection_count,
             so.while_count, so.sample_size);

  // mode switch per the local-phase rule
  if (mode_ == RunMode::IanpeHeuristic && accel_count_ >= cfg_.switch_after &&
      p_.h().is_zero() && std::fabs(f_before) > 0.0 &&
      std::fabs(f_y_ - f_before) / std::fabs(f_before) <= cfg_.progress_cutoff)
    mode_ = RunMode::GrNewton;
}

void Driver::gr_iteration() {
  if (grad_norm_y_ == 0.0) {
    stopped_ = true;
    reason_ = StopReason::Stationary;
    return;
  }
  // error budget tied to the gradient norm, so the sample grows as the
  // iterates localize
  const double delta_k =
      std::clamp(grad_norm_y_, cfg_.C / 1e12, cfg_.delta_max);
  const double lambda_gr = std::pow(grad_norm_y_, 1.5);
  auto oracle = freeze(delta_k, y_);
  y_ = gr_newton_step(p_, *oracle, y_, &counters_);
  f_y_ = refresh_gradient(y_);
  push_trace("gr", lambda_gr, delta_k, 0.0, 0, 0, oracle->sample_size());
}

RunResult Driver::run() {
  for (iter_ = 0; iter_ < cfg_.max_outer; ++iter_) {
    if (grad_stop()) {
      stopped_ = true;
      reason_ = StopReason::GradTol;
      break;
    }
    if (mode_ == RunMode::GrNewton)
      gr_iteration();
    else
      accel_iteration();
    if (stopped_) break;
  }
  if (!stopped_) reason_ = grad_stop() ? StopReason::GradTol : StopReason::MaxOuter;

  out_.y = y_;
  out_.f = f_y_;
  out_.grad_norm = grad_norm_y_;
  out_.reason = reason_;
  out_.iterations = iter_;
  out_.counters = counters_;
  return std::move(out_);
}

}  // namespace

RunResult solve_ianpe(const CompositeProblem& p, const Vec& x0,
                      const IanpeConfig& cfg) {
  Driver d(p, x0, cfg);
  return d.run();
}

}  // namespace ianpe
