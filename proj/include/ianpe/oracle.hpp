#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ianpe/problem.hpp"

namespace ianpe {

enum class OracleKind { Exact, SubSample, Sketch };

std::string to_string(OracleKind k);
OracleKind oracle_kind_from_string(const std::string& s);

struct OracleConfig {
  OracleKind kind = OracleKind::Exact;
  std::uint64_t seed = 0;
  double delta_target = 0.1;    // initial error budget delta
  double failure_budget = 0.01; // delta' in (0,1)
  std::size_t points_budget = 64;  // N, max line-search points per iteration
  std::size_t sketch_dim = 8;      // m
};

struct SampleSize {
  std::size_t size = 1;
  bool capped_at_full_batch = false;
};

// ceil(16 L1^2 / kappa^2 * log(2 N d / delta')), clamped to [1, n].
SampleSize sample_size_uniform(double L1, double kappa, std::size_t N,
                               std::size_t d, double delta_prime,
                               std::size_t n);

// A Hessian approximation frozen for one outer iteration: deterministic
// given (seed, outer iteration, redraw count), PSD at every query point,
// and with ||H(x) - hess g(x)|| <= delta on its declared budget.
class FrozenOracle {
 public:
  virtual ~FrozenOracle() = default;
  virtual DenseSymMatrix evaluate(const Vec& x) const = 0;

  OracleKind kind() const { return kind_; }
  double declared_delta() const { return delta_; }
  double shift() const { return shift_; }
  std::size_t sample_size() const { return sample_size_; }
  bool capped_at_full_batch() const { return capped_; }
  std::uint64_t component_hess_evals() const { return hess_evals_.load(); }

 protected:
  FrozenOracle(OracleKind kind, double delta, double shift, std::size_t size)
      : kind_(kind), delta_(delta), shift_(shift), sample_size_(size) {}
  void count_evals(std::uint64_t n) const { hess_evals_.fetch_add(n); }

  OracleKind kind_;
  double delta_;
  double shift_;
  std::size_t sample_size_;
  bool capped_ = false;

 private:
  mutable std::atomic<std::uint64_t> hess_evals_{0};
};

// delta = 0 oracle: the true Hessian.
std::unique_ptr<FrozenOracle> freeze_exact(const CompositeProblem& p,
                                           double delta_budget = 0.0);

// Uniform with-replacement sub-sample, |S| from sample_size_uniform with
// kappa = delta_k/2, plus the (delta_k/2) I shift. The sample is drawn once
// from the stream keyed by (cfg.seed, outer_iter, redraw) and reused at every
// query point of the iteration.
std::unique_ptr<FrozenOracle> freeze_subsample(const CompositeProblem& p,
                                               const OracleConfig& cfg,
                                               std::uint64_t outer_iter,
                                               std::uint32_t redraw,
                                               double delta_k);

class SketchOracle;

// Gaussian sketch with entries N(0, 1/m), frozen like the sub-sample.
// supports double_dimension() which redraws at 2m.
std::unique_ptr<SketchOracle> freeze_sketch(const CompositeProblem& p,
                                            const OracleConfig& cfg,
                                            std::uint64_t outer_iter,
                                            std::uint32_t redraw,
                                            double delta_k, const Vec& x);

class SketchOracle final : public FrozenOracle {
 public:
  DenseSymMatrix evaluate(const Vec& x) const override;
  void double_dimension();
  std::size_t sketch_dim() const { return m_; }

  // test hook: explicit sketch matrix (row major m x n)
  static std::unique_ptr<SketchOracle> with_matrix(const CompositeProblem& p,
                                                   Vec S, std::size_t m,
                                                   double delta_budget);

 private:
  friend std::unique_ptr<SketchOracle> freeze_sketch(const CompositeProblem&,
                                                     const OracleConfig&,
                                                     std::uint64_t,
                                                     std::uint32_t, double,
                                                     const Vec&);
  SketchOracle(const CompositeProblem& p, std::size_t m, double delta);
  void redraw();

  const CompositeProblem* p_;
  std::size_t m_;
  std::size_t n_ = 0;
  Vec S_;  // m x n row major
  std::uint64_t seed_ = 0, outer_ = 0;
  std::uint32_t redraw_count_ = 0;
  bool explicit_matrix_ = false;
};

// ||H(x) - hess g(x)|| via power iteration on the dense difference.
double oracle_error(const FrozenOracle& o, const CompositeProblem& p,
                    const Vec& x, int power_iters = 200);

// Freeze an oracle of the configured kind for one outer iteration.
std::unique_ptr<FrozenOracle> freeze_oracle(const CompositeProblem& p,
                                            const OracleConfig& cfg,
                                            std::uint64_t outer_iter,
                                            std::uint32_t redraw,
                                            double delta_k, const Vec& x);

}  // namespace ianpe
