#include "ianpe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ianpe/rng.hpp"

namespace ianpe {

LogisticRegression gen_logistic(const LogisticGenOptions& opt,
                                Vec* planted_out) {
  if (opt.n == 0 || opt.d == 0) throw ConfigError("gen_logistic: n, d >= 1");
  if (!(opt.density > 0.0 && opt.density <= 1.0))
    throw ConfigError("gen_logistic: density in (0,1]");
  if (!(opt.align >= 0.0 && opt.align < 1.0))
    throw ConfigError("gen_logistic: align in [0,1)");
  Rng rng(opt.seed, 0x6c6f67, 0);

  Vec unit(opt.d);
  for (auto& v : unit) v = rng.next_gaussian();
  const double pn = nrm2(unit);
  if (pn > 0.0)
    for (auto& v : unit) v /= pn;
  Vec planted = scaled(unit, opt.signal);
  if (planted_out) *planted_out = planted;

  const std::size_t nnz_row =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::llround(opt.density * opt.d)));
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  Vec values, labels;
  std::vector<std::uint32_t> pool(opt.d);
  std::iota(pool.begin(), pool.end(), 0u);

  for (std::size_t i = 0; i < opt.n; ++i) {
    // partial Fisher-Yates for the support
    for (std::size_t k = 0; k < nnz_row; ++k) {
      const std::size_t j =
          k + static_cast<std::size_t>(rng.next_below(opt.d - k));
      std::swap(pool[k], pool[j]);
    }
    std::vector<std::uint32_t> support(pool.begin(), pool.begin() + nnz_row);
    std::sort(support.begin(), support.end());

    Vec vals(nnz_row);
    for (auto& v : vals) v = rng.next_gaussian();
    if (opt.align > 0.0) {
      // mix a +-planted component into the row over its support
      const double flip = rng.next_unit() < 0.5 ? 1.0 : -1.0;
      const double iso = std::sqrt(pairwise_sum(
          nnz_row, [&](std::size_t k) { return vals[k] * vals[k]; }));
      for (std::size_t k = 0; k < nnz_row; ++k)
        vals[k] = opt.align * flip * unit[support[k]] *
                      std::sqrt(static_cast<double>(opt.d)) +
                  (1.0 - opt.align) * vals[k] / std::max(iso, 1e-300) *
                      std::sqrt(static_cast<double>(nnz_row));
    }
    const double vn = std::sqrt(pairwise_sum(
        nnz_row, [&](std::size_t k) { return vals[k] * vals[k]; }));
    const double target = opt.row_scale * (0.5 + 0.5 * rng.next_unit());
    if (vn > 0.0)
      for (auto& v : vals) v *= target / vn;

    double margin = 0.0;
    for (std::size_t k = 0; k < nnz_row; ++k)
      margin += vals[k] * planted[support[k]];
    const double prob = 1.0 / (1.0 + std::exp(-margin));
    labels.push_back(rng.next_unit() < prob ? 1.0 : -1.0);

    indices.insert(indices.end(), support.begin(), support.end());
    values.insert(values.end(), vals.begin(), vals.end());
    offsets.push_back(indices.size());
  }

  return LogisticRegression(
      SparseRowMatrix(opt.n, opt.d, std::move(offsets), std::move(indices),
                      std::move(values)),
      std::move(labels), opt.alpha);
}

QuadraticProblem gen_quadratic(std::size_t d, std::uint64_t seed, double mu) {
  Rng rng(seed, 0x71756164, 0);
  Vec g(d * d);
  for (auto& v : g) v = rng.next_gaussian();
  DenseSymMatrix Q(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double v = pairwise_sum(d, [&](std::size_t k) {
        return g[k * d + i] * g[k * d + j];
      });
      Q.set(i, j, v / static_cast<double>(d));
    }
  Q.add_shift(mu);
  Vec c(d);
  for (auto& v : c) v = rng.next_gaussian();
  return QuadraticProblem(std::move(Q), std::move(c));
}

Reference reference_minimizer(const CompositeProblem& p, const Vec& x0,
                              double tol, int max_iter) {
  if (!p.h().is_zero())
    throw ConfigError("reference_minimizer: smooth problems only");
  Vec x = x0;
  double f = p.eval_g(x);
  Reference ref;
  for (int it = 0; it < max_iter; ++it) {
    const Vec g = p.grad_g(x);
    const double gn = nrm2(g);
    if (gn <= tol) {
      ref.xstar = x;
      ref.fstar = f;
      ref.grad_norm = gn;
      ref.iterations = it;
      return ref;
    }
    DenseSymMatrix H = p.hess_g(x);
    // tiny Levenberg shift keeps the factorization honest near flat regions
    H.add_shift(1e-12 * std::max(1.0, H.trace() / H.order()));
    const Vec step = cholesky_solve(H, scaled(g, -1.0)).solution;
    const double dd = dot(g, step);  // negative along a Newton direction

    // terminal phase: f-decreases fall below double resolution long before
    // the gradient target, so accept full steps on gradient decrease
    {
      Vec cand = x;
      axpy(1.0, step, cand);
      if (nrm2(p.grad_g(cand)) <= 0.9 * gn) {
        x = std::move(cand);
        f = p.eval_g(x);
        continue;
      }
    }

    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      Vec cand = x;
      axpy(t, step, cand);
      const double fc = p.eval_g(cand);
      if (fc <= f + 1e-4 * t * dd) {
        x = std::move(cand);
        f = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // fall back to a gradient step when the Newton direction stalls
      Vec cand = x;
      axpy(-1.0 / std::max(p.L1(), 1e-12), g, cand);
      const double fc = p.eval_g(cand);
      if (fc >= f)
        throw NumericalFailure("reference_minimizer: no descent progress");
      x = std::move(cand);
      f = fc;
    }
  }
  throw NumericalFailure("reference_minimizer: max iterations at tol " +
                         std::to_string(tol));
}

}  // namespace ianpe
