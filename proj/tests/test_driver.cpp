#include <doctest.h>

#include <cmath>

#include "ianpe/driver.hpp"
#include "ianpe/synth.hpp"
#include "test_util.hpp"

using namespace ianpe;
using namespace ianpe::testutil;

TEST_CASE("tilde_x degenerate combinations") {
  const Vec x{1.0, 2.0};
  const Vec y{5.0, -3.0};
  // A = 0 projects onto x regardless of lambda
  CHECK(tilde_x(0.0, y, x, 0.7) == x);
  // x = y collapses the combination
  CHECK(tilde_x(1.5, x, x, 2.0) == x);
}

TEST_CASE("tilde_x golden-ratio weights at A = lambda = 1") {
  const Vec x{1.0, 0.0};
  const Vec y{0.0, 1.0};
  const double a = accel_weight(1.0, 1.0);
  CHECK(a == doctest::Approx(1.6180339887498948482).epsilon(1e-15));
  const Vec xt = tilde_x(1.0, y, x, 1.0);
  CHECK(xt[0] == doctest::Approx(0.6180339887498948482).epsilon(1e-14));
  CHECK(xt[1] == doctest::Approx(0.3819660112501051518).epsilon(1e-14));
}

TEST_CASE("accel_weight solves its quadratic identity") {
  Rng rng(2718, 0, 0);
  for (int t = 0; t < 1000; ++t) {
    const double lambda = std::exp(6.0 * (rng.next_unit() - 0.5));
    const double A = std::exp(8.0 * (rng.next_unit() - 0.5)) - 0.3;
    if (A < 0.0) continue;
    const double a = accel_weight(lambda, A);
    CHECK(a * a ==
          doctest::Approx(lambda * (A + a)).epsilon(1e-10));
  }
}

TEST_CASE("strict solver on a quadratic stops at the gradient tolerance") {
  const QuadraticProblem q = gen_quadratic(6, 101);
  IanpeConfig cfg;
  cfg.mode = RunMode::IanpeStrict;
  cfg.seed = 5;
  const Vec x0 = random_vec(6, 102);
  const RunResult res = solve_ianpe(q, x0, cfg);
  CHECK(res.grad_norm < cfg.grad_tol);
  CHECK(res.f <= q.eval_g(x0));
  // L2 = 0 collapses the rate bound; one proximal sweep suffices
  const Vec xs = q.minimizer();
  CHECK(res.f - q.eval_g(xs) <= 1e-10 * std::max(1.0, std::fabs(res.f)));
}

namespace {

struct StrictRun {
  LogisticRegression problem;
  Reference ref;
  RunResult res;
  IanpeConfig cfg;
  Vec x0;
};

StrictRun run_strict_logistic(std::uint64_t seed, std::size_t n = 200,
                              std::size_t d = 10) {
  LogisticGenOptions opt;
  opt.n = n;
  opt.d = d;
  opt.seed = seed;
  opt.alpha = 1e-5;
  StrictRun sr{gen_logistic(opt), {}, {}, {}, Vec(d, 0.0)};
  sr.ref = reference_minimizer(sr.problem, sr.x0, 1e-12, 500);
  sr.cfg.mode = RunMode::IanpeStrict;
  sr.cfg.seed = seed;
  sr.cfg.keep_diagnostics = true;
  sr.cfg.max_outer = 100;
  sr.res = solve_ianpe(sr.problem, sr.x0, sr.cfg);
  return sr;
}

}  // namespace

TEST_CASE("strict logistic run satisfies the k^{-7/2} rate bound") {
  for (std::uint64_t seed : {11ull, 12ull}) {
    const StrictRun sr = run_strict_logistic(seed);
    CHECK(sr.res.grad_norm < sr.cfg.grad_tol);

    const double d0 = nrm2_diff(sr.x0, sr.ref.xstar);
    const double st = sr.cfg.sigma_tilde();
    const double rate_c = 8.2670278818932260814;  // 3^{7/2} / (4 sqrt 2)
    const double bound_c = rate_c * sr.problem.L2() * d0 * d0 * d0 /
                           (sr.cfg.sigma_l * std::sqrt(1.0 - st * st));
    // f(y_k) - f* <= bound_c k^{-7/2} for every accelerated iteration
    double prev_f = sr.problem.eval_f(sr.x0);
    int k = 0;
    for (const auto& diag : sr.res.diags) {
      ++k;
      const double gap = diag.f_y - sr.ref.fstar;
      CHECK(gap <= bound_c * std::pow(static_cast<double>(k), -3.5));
      CHECK(diag.f_y <= prev_f + 1e-15);  // monotone by the pairwise argmin
      prev_f = diag.f_y;
    }
    CHECK(k >= 1);
  }
}

TEST_CASE("strict runs honor the accelerator algebra and certificates") {
  const StrictRun sr = run_strict_logistic(21);
  const double st = sr.cfg.sigma_tilde();
  double A = 0.0;
  for (const auto& d : sr.res.diags) {
    // a_{k+1}^2 = lambda_{k+1} A_{k+1}
    CHECK(d.a * d.a ==
          doctest::Approx(d.lambda * d.A_next).epsilon(1e-10));
    CHECK(d.A_next > A);
    A = d.A_next;
    // accepted steps sit inside the goal window (closed comparisons)
    const double lo = 2.0 * sr.cfg.sigma_l / sr.problem.L2();
    const double hi = 2.0 * sr.cfg.sigma_u / sr.problem.L2();
    CHECK(d.step_length >= lo);
    CHECK(d.step_length <= hi);
    // sigma~ certificate recheck with the true gradient
    CHECK(d.sigma_lhs <=
          st * st * d.step_norm * d.step_norm * (1.0 + 1e-9));
    // converted bounds
    CHECK(d.v_norm <= d.v_bound * (1.0 + 1e-9));
    CHECK(d.eps <= d.eps_bound + 1e-18);
    // lambda delta <= C throughout
    CHECK(d.lambda_delta <= sr.cfg.C * (1.0 + 1e-9));
  }
}

TEST_CASE("boundedness of iterates against the reference solution") {
  const StrictRun sr = run_strict_logistic(31);
  const double d0 = nrm2_diff(sr.x0, sr.ref.xstar);
  const double st = sr.cfg.sigma_tilde();
  const double ybound = (2.0 / std::sqrt(1.0 - st * st) + 1.0) * d0;
  for (const auto& d : sr.res.diags) {
    CHECK(nrm2_diff(d.x_next, sr.ref.xstar) <= d0 * (1.0 + 1e-8));
    CHECK(nrm2_diff(d.y_next, sr.ref.xstar) <= ybound * (1.0 + 1e-8));
  }
}

TEST_CASE("trace bodies are byte-identical across reruns") {
  LogisticGenOptions opt;
  opt.n = 150;
  opt.d = 8;
  opt.seed = 77;
  const LogisticRegression p = gen_logistic(opt);
  IanpeConfig cfg;
  cfg.mode = RunMode::IanpeHeuristic;
  cfg.oracle.kind = OracleKind::SubSample;
  cfg.seed = 9;
  cfg.max_outer = 40;
  const Vec x0(8, 0.0);
  const RunResult r1 = solve_ianpe(p, x0, cfg);
  const RunResult r2 = solve_ianpe(p, x0, cfg);
  CHECK(trace_body(r1.trace) == trace_body(r2.trace));
  CHECK(!r1.trace.empty());
}

TEST_CASE("gr_newton_step fixed point and closed form") {
  const QuadraticProblem q = gen_quadratic(4, 201);
  const Vec xs = q.minimizer();
  const auto oracle = freeze_exact(q);
  // zero gradient: the step returns its input
  CHECK(nrm2_diff(gr_newton_step(q, *oracle, xs), xs) <= 1e-9);

  // unit gradient norm: (Q + I)(y1 - y) = -grad
  DenseSymMatrix Q = q.Q();
  Vec c = q.c();
  const Vec y0(4, 0.0);
  const Vec grad = q.grad_g(y0);
  const double gn = nrm2(grad);
  // rescale c so the gradient at 0 has unit norm
  for (auto& v : c) v /= gn;
  const QuadraticProblem q1(Q, c);
  const Vec g1 = q1.grad_g(y0);
  CHECK(nrm2(g1) == doctest::Approx(1.0).epsilon(1e-12));
  const auto o1 = freeze_exact(q1);
  const Vec got = gr_newton_step(q1, *o1, y0);
  DenseSymMatrix M = Q;
  M.add_shift(1.0);
  const Vec want = cholesky_solve(M, scaled(g1, -1.0)).solution;
  CHECK(nrm2_diff(got, want) <= 1e-12);
}

TEST_CASE("gr mode decreases f on seeded logistic instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    LogisticGenOptions opt;
    opt.n = 60;
    opt.d = 6;
    opt.seed = 300 + seed;
    const LogisticRegression p = gen_logistic(opt);
    IanpeConfig cfg;
    cfg.mode = RunMode::GrNewton;
    cfg.seed = seed;
    cfg.max_outer = 50;
    const RunResult res = solve_ianpe(p, random_vec(6, 400 + seed), cfg);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& r : res.trace) {
      CHECK(r.f <= prev + 1e-12);
      prev = r.f;
    }
    CHECK(res.grad_norm < cfg.grad_tol);
  }
}

TEST_CASE("adaptive controller follows the threshold rule") {
  // short search: double the stepsize, relax sigma toward the floor
  const auto d1 = adaptive_update(1, 2, 0.9, 0.7, 0.95, 2.0, 3.0);
  CHECK(d1.lambda_warm == 6.0);
  CHECK(d1.sigma_k == doctest::Approx(0.855));
  CHECK(!d1.redo);
  // long search: widen sigma and redo
  const auto d2 = adaptive_update(5, 2, 0.9, 0.7, 0.95, 2.0, 3.0);
  CHECK(d2.sigma_k == doctest::Approx(0.9 / 0.95));
  CHECK(d2.redo);
  // clamped at the ceiling: no redo
  const auto d3 = adaptive_update(5, 2, 0.95, 0.7, 0.95, 2.0, 3.0);
  CHECK(d3.sigma_k == 0.95);
  CHECK(!d3.redo);
  // floor clamp
  const auto d4 = adaptive_update(0, 2, 0.7, 0.7, 0.95, 2.0, 3.0);
  CHECK(d4.sigma_k == 0.7);
}

TEST_CASE("heuristic mode with sub-sampling converges") {
  LogisticGenOptions opt;
  opt.n = 2000;
  opt.d = 20;
  opt.seed = 88;
  const LogisticRegression p = gen_logistic(opt);
  IanpeConfig cfg;
  cfg.mode = RunMode::IanpeHeuristic;
  cfg.oracle.kind = OracleKind::SubSample;
  cfg.seed = 3;
  cfg.max_outer = 100;
  const RunResult res = solve_ianpe(p, Vec(20, 0.0), cfg);
  CHECK(res.grad_norm < cfg.grad_tol);
  CHECK(res.reason == StopReason::GradTol);
}

TEST_CASE("composite objectives run through the certificate stopping rule") {
  // g quadratic + 0.1 ||.||_1: termination comes from the (rho_bar, eps_bar)
  // certificate test, and the output satisfies the composite optimality
  // condition against an independent prox-residual check
  QuadraticProblem q(random_psd(6, 501, 0.5), random_vec(6, 502));
  q.set_h(NonSmooth::l1(0.1));
  IanpeConfig cfg;
  cfg.mode = RunMode::IanpeStrict;
  cfg.seed = 3;
  cfg.max_outer = 150;
  cfg.rho_bar = 1e-8;
  cfg.eps_bar = 1e-8;
  const Vec x0 = random_vec(6, 503);
  const RunResult res = solve_ianpe(q, x0, cfg);
  CHECK(res.reason == StopReason::EarlyCertificate);

  // prox-gradient residual at the reported point
  const double tau = 1.0 / (q.L1() + 1.0);
  Vec z = res.y;
  axpy(-tau, q.grad_g(res.y), z);
  const Vec ynext = q.prox_h(z, tau);
  CHECK(nrm2_diff(ynext, res.y) / tau <= 1e-6);

  // f decreased along the run
  CHECK(res.f <= q.eval_f(x0));
}

TEST_CASE("the accelerator curve satisfies its smoothness contract") {
  // x~(lambda) runs from y (lambda -> 0) to x (lambda -> inf):
  //   ||x~(s) - x~(t)|| <= min{ (M0/t)(s - t), M1 ||x~(s) - x~(0)|| }
  // with M1 = 1 structurally, M0 = (2/sqrt(1-sigma~^2)+1) d0 on runs with
  // bounded iterates
  const StrictRun sr = run_strict_logistic(61);
  const double st = sr.cfg.sigma_tilde();
  const double d0 = nrm2_diff(sr.x0, sr.ref.xstar);
  const double m0 = (2.0 / std::sqrt(1.0 - st * st) + 1.0) * d0;
  Rng rng(62, 0, 0);
  for (const auto& diag : sr.res.diags) {
    const Curve curve = make_curve(diag.A_next, diag.y_next, diag.x_next);
    for (int probe = 0; probe < 20; ++probe) {
      const double t = std::exp(6.0 * (rng.next_unit() - 0.5));
      const double s = t * (1.0 + 3.0 * rng.next_unit());
      const double lhs = nrm2_diff(curve.eval(s), curve.eval(t));
      const double m1_part = nrm2_diff(curve.eval(s), curve.origin);
      const double m0_part = m0 / t * (s - t);
      CHECK(lhs <= m1_part * (1.0 + 1e-12) + 1e-15);
      CHECK(lhs <= m0_part * (1.0 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("heuristic mode with the sketch oracle converges and is flagged") {
  LogisticGenOptions opt;
  opt.n = 400;
  opt.d = 8;
  opt.seed = 89;
  const LogisticRegression p = gen_logistic(opt);
  IanpeConfig cfg;
  cfg.mode = RunMode::IanpeHeuristic;
  cfg.oracle.kind = OracleKind::Sketch;
  cfg.oracle.sketch_dim = 32;
  cfg.seed = 6;
  cfg.max_outer = 150;
  const RunResult res = solve_ianpe(p, Vec(8, 0.0), cfg);
  CHECK(res.grad_norm < cfg.grad_tol);
  REQUIRE(!res.trace.empty());
  CHECK(res.trace.front().mode.find("sketch-heuristic") != std::string::npos);
}

TEST_CASE("config validation rejects broken invariants") {
  IanpeConfig cfg;
  cfg.sigma_u = 0.95;  // sigma_hat + sigma_u >= 1
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  IanpeConfig cfg2;
  cfg2.C = 0.9;  // sigma~ >= 1
  CHECK_THROWS_AS(cfg2.validate(), ConfigError);
  IanpeConfig ok;
  ok.validate();
}
