#include "ianpe/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "ianpe/rng.hpp"

namespace ianpe {

std::string to_string(OracleKind k) {
  switch (k) {
    case OracleKind::Exact:
      return "exact";
    case OracleKind::SubSample:
      return "subsample";
    case OracleKind::Sketch:
      return "sketch";
  }
  return "exact";
}

OracleKind oracle_kind_from_string(const std::string& s) {
  if (s == "exact") return OracleKind::Exact;
  if (s == "subsample") return OracleKind::SubSample;
  if (s == "sketch") return OracleKind::Sketch;
  throw ConfigError("unknown oracle kind: " + s);
}

SampleSize sample_size_uniform(double L1, double kappa, std::size_t N,
                               std::size_t d, double delta_prime,
                               std::size_t n) {
  if (!(kappa > 0.0) || kappa >= 1.0)
    throw InvalidTolerance("sample_size_uniform: kappa in (0,1)");
  if (!(delta_prime > 0.0) || delta_prime >= 1.0)
    throw InvalidTolerance("sample_size_uniform: delta' in (0,1)");
  if (N < 1 || d < 1)
    throw ConfigError("sample_size_uniform: N, d >= 1");
  const double arg = 2.0 * static_cast<double>(N) * static_cast<double>(d) /
                     delta_prime;
  const double raw = 16.0 * L1 * L1 / (kappa * kappa) * std::log(arg);
  SampleSize out;
  if (!(raw > 1.0)) {
    out.size = 1;
    return out;
  }
  const double up = std::ceil(raw);
  if (n > 0 && up >= static_cast<double>(n)) {
    out.size = n;
    out.capped_at_full_batch = true;
  } else {
    out.size = static_cast<std::size_t>(up);
  }
  return out;
}

namespace {

class ExactOracle final : public FrozenOracle {
 public:
  ExactOracle(const CompositeProblem& p, double delta)
      : FrozenOracle(OracleKind::Exact, delta, 0.0, 0), p_(&p) {}
  DenseSymMatrix evaluate(const Vec& x) const override {
    count_evals(std::max<std::size_t>(p_->num_components(), 1));
    return p_->hess_g(x);
  }

 private:
  const CompositeProblem* p_;
};

class SubSampleOracle final : public FrozenOracle {
 public:
  SubSampleOracle(const CompositeProblem& p, std::vector<std::uint32_t> idx,
                  bool capped, double delta)
      : FrozenOracle(OracleKind::SubSample, delta, delta / 2.0, idx.size()),
        p_(&p),
        idx_(std::move(idx)) {
    capped_ = capped;
  }
  DenseSymMatrix evaluate(const Vec& x) const override {
    count_evals(idx_.size());
    DenseSymMatrix H = p_->subsample_hess(x, idx_);
    H.add_shift(shift_);
    return H;
  }
  const std::vector<std::uint32_t>& sample() const { return idx_; }

 private:
  const CompositeProblem* p_;
  std::vector<std::uint32_t> idx_;
};

}  // namespace

std::unique_ptr<FrozenOracle> freeze_exact(const CompositeProblem& p,
                                           double delta_budget) {
  return std::make_unique<ExactOracle>(p, delta_budget);
}

std::unique_ptr<FrozenOracle> freeze_subsample(const CompositeProblem& p,
                                               const OracleConfig& cfg,
                                               std::uint64_t outer_iter,
                                               std::uint32_t redraw,
                                               double delta_k) {
  const std::size_t n = p.num_components();
  if (n == 0)
    throw ConfigError("freeze_subsample: problem is not a finite sum");
  // kappa must stay inside (0,1) for the concentration bound; a smaller
  // kappa only enlarges the sample, so the error budget still holds
  const double kappa = std::min(delta_k / 2.0, 0.99);
  const SampleSize ss =
      sample_size_uniform(p.L1(), kappa, cfg.points_budget, p.dim(),
                          cfg.failure_budget, n);
  std::vector<std::uint32_t> idx;
  idx.reserve(ss.size);
  if (ss.capped_at_full_batch) {
    // full batch: H~ equals the exact Hessian, only the shift remains
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  } else {
    Rng rng(cfg.seed, outer_iter, redraw);
    for (std::size_t i = 0; i < ss.size; ++i)
      idx.push_back(static_cast<std::uint32_t>(rng.next_below(n)));
    std::sort(idx.begin(), idx.end());
  }
  return std::make_unique<SubSampleOracle>(p, std::move(idx),
                                           ss.capped_at_full_batch, delta_k);
}

// ---------------------------------------------------------------------------
// SketchOracle

SketchOracle::SketchOracle(const CompositeProblem& p, std::size_t m,
                           double delta)
    : FrozenOracle(OracleKind::Sketch, delta, 0.0, m), p_(&p), m_(m) {
  if (!p.has_sqrt_hess())
    throw ConfigError("freeze_sketch: no square-root Hessian factor");
  n_ = p.num_components();
  if (m_ < 1) throw ConfigError("freeze_sketch: m >= 1");
  if (m_ > n_) throw SketchDimExceedsRows("freeze_sketch: m > n");
}

void SketchOracle::redraw() {
  Rng rng(seed_ ^ 0x736b65746368ull, outer_, redraw_count_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
  S_.resize(m_ * n_);
  for (auto& s : S_) s = scale * rng.next_gaussian();
  sample_size_ = m_;
}

void SketchOracle::double_dimension() {
  if (explicit_matrix_)
    throw ConfigError("double_dimension: oracle has a fixed matrix");
  if (2 * m_ > n_)
    throw SketchDimExceedsRows("double_dimension: 2m exceeds row count");
  m_ *= 2;
  ++redraw_count_;
  redraw();
}

DenseSymMatrix SketchOracle::evaluate(const Vec& x) const {
  count_evals(n_);  // one pass over the data per query
  return p_->sketch_hess(x, S_, m_);
}

std::unique_ptr<SketchOracle> SketchOracle::with_matrix(
    const CompositeProblem& p, Vec S, std::size_t m, double delta_budget) {
  std::unique_ptr<SketchOracle> o(new SketchOracle(p, m, delta_budget));
  if (S.size() != m * p.num_components())
    throw DimensionMismatch("with_matrix: S must be m x n");
  o->S_ = std::move(S);
  o->explicit_matrix_ = true;
  return o;
}

std::unique_ptr<SketchOracle> freeze_sketch(const CompositeProblem& p,
                                            const OracleConfig& cfg,
                                            std::uint64_t outer_iter,
                                            std::uint32_t redraw,
                                            double delta_k, const Vec& x) {
  std::unique_ptr<SketchOracle> o(
      new SketchOracle(p, cfg.sketch_dim, delta_k));
  o->seed_ = cfg.seed;
  o->outer_ = outer_iter;
  o->redraw_count_ = redraw;
  o->redraw();
  // PSD sanity of the frozen sketch at the anchor point
  const DenseSymMatrix H = o->evaluate(x);
  if (!H.all_finite())
    throw NumericalFailure("freeze_sketch: non-finite sketch Hessian");
  return o;
}

double oracle_error(const FrozenOracle& o, const CompositeProblem& p,
                    const Vec& x, int power_iters) {
  DenseSymMatrix diff = o.evaluate(x);
  diff.add_scaled(p.hess_g(x), -1.0);
  return spectral_norm_upper(diff, power_iters);
}

std::unique_ptr<FrozenOracle> freeze_oracle(const CompositeProblem& p,
                                            const OracleConfig& cfg,
                                            std::uint64_t outer_iter,
                                            std::uint32_t redraw,
                                            double delta_k, const Vec& x) {
  switch (cfg.kind) {
    case OracleKind::Exact:
      return freeze_exact(p, delta_k);
    case OracleKind::SubSample:
      return freeze_subsample(p, cfg, outer_iter, redraw, delta_k);
    case OracleKind::Sketch:
      return freeze_sketch(p, cfg, outer_iter, redraw, delta_k, x);
  }
  throw ConfigError("freeze_oracle: unknown kind");
}

}  // namespace ianpe
