#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "ianpe/numerics.hpp"

namespace ianpe {

// Nonsmooth part of the composite objective. The solvers only touch it
// through eval/prox, and every subgradient they use is extracted from the
// prox optimality condition.
struct NonSmooth {
  enum class Kind { Zero, L1 };
  Kind kind = Kind::Zero;
  double mu = 0.0;

  static NonSmooth zero() { return {}; }
  static NonSmooth l1(double mu) { return {Kind::L1, mu}; }

  bool is_zero() const { return kind == Kind::Zero; }
  double eval(const Vec& x) const;
  Vec prox(const Vec& z, double tau) const;
  // Lipschitz constant w.r.t. the euclidean norm (L' in the certificates)
  double lipschitz(std::size_t dim) const;
};

// Composite objective f = g + h. g is smooth convex with Lipschitz gradient
// (L1) and Lipschitz Hessian (L2); h is convex and Lh-Lipschitz.
class CompositeProblem {
 public:
  virtual ~CompositeProblem() = default;

  virtual std::size_t dim() const = 0;
  virtual double eval_g(const Vec& x) const = 0;
  virtual Vec grad_g(const Vec& x) const = 0;
  virtual DenseSymMatrix hess_g(const Vec& x) const = 0;
  // combined evaluation, one pass over the data
  virtual double value_and_grad(const Vec& x, Vec& grad) const;

  virtual double L1() const = 0;
  virtual double L2() const = 0;
  double Lh() const { return h_.lipschitz(dim()); }

  // finite-sum hooks (sub-sampled oracles); zero components means "not one"
  virtual std::size_t num_components() const { return 0; }
  virtual DenseSymMatrix subsample_hess(const Vec& x,
                                        const std::vector<std::uint32_t>& S) const;
  // sketch hook: H = (S B)^T (S B) + ridge, with B the n x d square-root
  // factor of the data part of the Hessian and S given dense row major m x n
  virtual bool has_sqrt_hess() const { return false; }
  virtual DenseSymMatrix sketch_hess(const Vec& x, const Vec& S,
                                     std::size_t m) const;

  const NonSmooth& h() const { return h_; }
  void set_h(NonSmooth h) { h_ = h; }
  double eval_h(const Vec& x) const { return h_.eval(x); }
  Vec prox_h(const Vec& z, double tau) const { return h_.prox(z, tau); }
  // s = (z - y)/tau is the subgradient of h at y = prox_h(z, tau)
  Vec subgrad_from_prox(const Vec& z, double tau, const Vec& y) const;

  double eval_f(const Vec& x) const { return eval_g(x) + eval_h(x); }

 protected:
  NonSmooth h_;
};

// Regularized logistic regression:
//   f(x) = (1/n) sum_i log(1 + exp(-b_i w_i^T x)) + (alpha/2) ||x||^2
class LogisticRegression final : public CompositeProblem {
 public:
  LogisticRegression(SparseRowMatrix data, Vec labels, double alpha);

  std::size_t dim() const override { return data_.cols(); }
  double eval_g(const Vec& x) const override;
  Vec grad_g(const Vec& x) const override;
  DenseSymMatrix hess_g(const Vec& x) const override;
  double value_and_grad(const Vec& x, Vec& grad) const override;

  double L1() const override { return l1_; }
  double L2() const override { return l2_; }

  std::size_t num_components() const override { return data_.rows(); }
  DenseSymMatrix subsample_hess(
      const Vec& x, const std::vector<std::uint32_t>& S) const override;
  bool has_sqrt_hess() const override { return true; }
  DenseSymMatrix sketch_hess(const Vec& x, const Vec& S,
                             std::size_t m) const override;

  const SparseRowMatrix& data() const { return data_; }
  const Vec& labels() const { return labels_; }
  double alpha() const { return alpha_; }
  double max_row_norm() const { return max_row_norm_; }

 private:
  double margin(std::size_t i, const Vec& x) const {
    return labels_[i] * data_.row_dot(i, x);
  }
  SparseRowMatrix data_;
  Vec labels_;
  double alpha_;
  double max_row_norm_ = 0.0;
  double l1_ = 0.0, l2_ = 0.0;
};

// (L1, L2) for a logistic model: L1 = max_i ||w_i||^2 / 4 + alpha and
// L2 = max_i ||w_i||^3 / (6 sqrt(3)), the global bound on the third
// derivative of the logistic loss.
std::pair<double, double> lipschitz_bounds(const SparseRowMatrix& data,
                                           double alpha);

// Convex quadratic g(x) = x^T Q x / 2 + c^T x; test fixture with an
// analytic optimum when Q is positive definite.
class QuadraticProblem final : public CompositeProblem {
 public:
  QuadraticProblem(DenseSymMatrix Q, Vec c);

  std::size_t dim() const override { return c_.size(); }
  double eval_g(const Vec& x) const override;
  Vec grad_g(const Vec& x) const override;
  DenseSymMatrix hess_g(const Vec&) const override { return Q_; }

  double L1() const override { return l1_; }
  double L2() const override { return 0.0; }

  const DenseSymMatrix& Q() const { return Q_; }
  const Vec& c() const { return c_; }
  // -Q^{-1} c; throws NotPositiveDefinite when Q is singular
  Vec minimizer() const;

 private:
  DenseSymMatrix Q_;
  Vec c_;
  double l1_;
};

// Central-difference agreement of grad_g with eval_g and of Hessian-vector
// products with grad_g, both as max relative errors.
struct FdReport {
  double grad_rel_err = 0.0;
  double hess_rel_err = 0.0;
};
FdReport fd_check(const CompositeProblem& p, const Vec& x,
                  std::uint64_t probe_seed = 17, int num_probes = 4);

// Cumulative evaluator-call accounting, used for the epoch counts in traces.
struct CostCounters {
  std::uint64_t grad_component_evals = 0;
  std::uint64_t hess_component_evals = 0;
  std::uint64_t ans_solves = 0;

  // epochs for an n-component finite sum; n = 1 for monolithic problems
  double data_passes(std::size_t n) const {
    const double nn = n == 0 ? 1.0 : static_cast<double>(n);
    return (static_cast<double>(grad_component_evals) +
            static_cast<double>(hess_component_evals)) /
           nn;
  }
};

}  // namespace ianpe
