#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ianpe/oracle.hpp"
#include "ianpe/synth.hpp"
#include "test_util.hpp"

using namespace ianpe;
using namespace ianpe::testutil;

TEST_CASE("sample_size_uniform matches the closed form") {
  // log(2*1*1 / (2 e^-4)) = 4, 16 * 1 / (1/4) * 4 = 256
  const auto s = sample_size_uniform(1.0, 0.5, 1, 1, 2.0 * std::exp(-4.0),
                                     1u << 20);
  CHECK(s.size == 256);
  CHECK(!s.capped_at_full_batch);
}

TEST_CASE("sample_size_uniform clamps to one sample") {
  const auto s = sample_size_uniform(0.01, 0.9, 1, 1, 0.5, 100);
  CHECK(s.size == 1);
}

TEST_CASE("sample_size_uniform a9a-scale value, high-precision cross-check") {
  // 16 (1/4)^2 / 0.1^2 = 100; ceil(100 log(2*40*123/0.01)) = 1380
  const auto s = sample_size_uniform(0.25, 0.1, 40, 123, 0.01, 1u << 30);
  CHECK(s.size == 1380);
}

TEST_CASE("sample_size_uniform rejects bad tolerances") {
  CHECK_THROWS_AS(sample_size_uniform(1.0, 1.0, 1, 1, 0.5, 10),
                  InvalidTolerance);
  CHECK_THROWS_AS(sample_size_uniform(1.0, 0.5, 1, 1, 1.0, 10),
                  InvalidTolerance);
  CHECK_THROWS_AS(sample_size_uniform(1.0, 0.5, 1, 1, 0.0, 10),
                  InvalidTolerance);
}

namespace {

LogisticRegression battery_problem(std::size_t n, std::size_t d,
                                   std::uint64_t seed) {
  LogisticGenOptions opt;
  opt.n = n;
  opt.d = d;
  opt.seed = seed;
  opt.alpha = 1e-3;
  return gen_logistic(opt);
}

}  // namespace

TEST_CASE("sub-sample freeze is deterministic in (seed, iteration, redraw)") {
  const LogisticRegression p = battery_problem(200, 8, 17);
  OracleConfig cfg;
  cfg.kind = OracleKind::SubSample;
  cfg.seed = 99;
  const Vec x = random_vec(8, 5);

  const double delta = 0.8;  // keeps |S| well below n
  const auto o1 = freeze_subsample(p, cfg, 3, 0, delta);
  CHECK(!o1->capped_at_full_batch());
  const auto o2 = freeze_subsample(p, cfg, 3, 0, delta);
  const DenseSymMatrix h1 = o1->evaluate(x);
  const DenseSymMatrix h2 = o2->evaluate(x);
  CHECK(h1.packed() == h2.packed());

  const auto o3 = freeze_subsample(p, cfg, 3, 1, delta);
  CHECK(o1->sample_size() == o3->sample_size());
  // a redraw changes the sample (overwhelmingly likely at this size)
  CHECK(o1->evaluate(x).packed() != o3->evaluate(x).packed());
}

TEST_CASE("capped sub-sample equals the exact Hessian plus the shift") {
  const LogisticRegression p = battery_problem(40, 6, 21);
  OracleConfig cfg;
  cfg.kind = OracleKind::SubSample;
  cfg.seed = 1;
  const double delta = 0.01;  // forces |S| >= n = 40
  const auto o = freeze_subsample(p, cfg, 0, 0, delta);
  CHECK(o->capped_at_full_batch());
  CHECK(o->sample_size() == 40);
  CHECK(o->shift() == delta / 2.0);

  const Vec x = random_vec(6, 6);
  const double err = oracle_error(*o, p, x);
  CHECK(err == doctest::Approx(delta / 2.0).epsilon(1e-9));
}

TEST_CASE("sub-sampled oracles stay PSD on random probes") {
  const LogisticRegression p = battery_problem(300, 10, 23);
  OracleConfig cfg;
  cfg.kind = OracleKind::SubSample;
  cfg.seed = 3;
  const auto o = freeze_subsample(p, cfg, 1, 0, 0.3);
  const Vec x = random_vec(10, 7);
  const DenseSymMatrix H = o->evaluate(x);
  Rng rng(55, 0, 0);
  const double scale = H.trace();
  for (int t = 0; t < 100; ++t) {
    Vec v(10);
    for (auto& vi : v) vi = rng.next_gaussian();
    CHECK(H.quad_form(v) >= -1e-10 * dot(v, v) * scale);
  }
}

TEST_CASE("sub-sample concentration at the lemma's sample size") {
  const LogisticRegression p = battery_problem(1000, 20, 29);
  OracleConfig cfg;
  cfg.kind = OracleKind::SubSample;
  cfg.seed = 12;
  cfg.failure_budget = 0.1;
  cfg.points_budget = 10;
  const double delta = 0.2;
  const Vec x = random_vec(20, 9);
  int bad = 0;
  const int draws = 40;
  for (int t = 0; t < draws; ++t) {
    const auto o = freeze_subsample(p, cfg, static_cast<std::uint64_t>(t), 0,
                                    delta);
    CHECK(!o->capped_at_full_batch());
    if (oracle_error(*o, p, x) > delta) ++bad;
  }
  CHECK(static_cast<double>(bad) / draws <= cfg.failure_budget);
}

TEST_CASE("identity sketch recovers the exact Hessian") {
  const LogisticRegression p = battery_problem(30, 5, 31);
  const std::size_t n = 30;
  Vec S(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) S[i * n + i] = 1.0;
  const auto o = SketchOracle::with_matrix(p, std::move(S), n, 0.0);
  const Vec x = random_vec(5, 10);
  DenseSymMatrix diff = o->evaluate(x);
  diff.add_scaled(p.hess_g(x), -1.0);
  CHECK(spectral_norm_upper(diff, 200) <= 1e-12);
}

TEST_CASE("rank-deficient sketch stays PSD") {
  const LogisticRegression p = battery_problem(50, 6, 37);
  OracleConfig cfg;
  cfg.kind = OracleKind::Sketch;
  cfg.seed = 4;
  cfg.sketch_dim = 1;
  const Vec x = random_vec(6, 11);
  const auto o = freeze_sketch(p, cfg, 0, 0, 0.2, x);
  const DenseSymMatrix H = o->evaluate(x);
  Rng rng(66, 0, 0);
  for (int t = 0; t < 50; ++t) {
    Vec v(6);
    for (auto& vi : v) vi = rng.next_gaussian();
    CHECK(H.quad_form(v) >= -1e-12 * dot(v, v) * std::max(1.0, H.trace()));
  }
}

TEST_CASE("sketch error median is nonincreasing as the dimension doubles") {
  const LogisticRegression p = battery_problem(500, 20, 41);
  const Vec x = random_vec(20, 13);
  auto median_err = [&](std::size_t m) {
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 50; ++s) {
      OracleConfig cfg;
      cfg.kind = OracleKind::Sketch;
      cfg.seed = 1000 + s;
      cfg.sketch_dim = m;
      const auto o = freeze_sketch(p, cfg, 0, 0, 0.2, x);
      errs.push_back(oracle_error(*o, p, x, 120));
    }
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2];
  };
  const double e8 = median_err(8);
  const double e32 = median_err(32);
  const double e128 = median_err(128);
  CHECK(e32 <= e8 * 1.05);
  CHECK(e128 <= e32 * 1.05);
  CHECK(e128 <= e8);
}

TEST_CASE("double_dimension redraws and respects the row bound") {
  const LogisticRegression p = battery_problem(20, 4, 43);
  OracleConfig cfg;
  cfg.kind = OracleKind::Sketch;
  cfg.seed = 5;
  cfg.sketch_dim = 8;
  const Vec x = random_vec(4, 14);
  const auto o = freeze_sketch(p, cfg, 0, 0, 0.2, x);
  o->double_dimension();
  CHECK(o->sketch_dim() == 16);
  CHECK_THROWS_AS(o->double_dimension(), SketchDimExceedsRows);
}

TEST_CASE("exact oracle reports zero error") {
  const LogisticRegression p = battery_problem(25, 4, 47);
  const auto o = freeze_exact(p, 0.1);
  const Vec x = random_vec(4, 15);
  CHECK(oracle_error(*o, p, x) <= 1e-14);
  CHECK(o->declared_delta() == 0.1);
}
