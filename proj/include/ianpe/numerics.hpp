#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ianpe/errors.hpp"

namespace ianpe {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Reductions. Every scalar reduction in the library goes through the fixed
// pairwise tree below, so a result never depends on how callers might shard
// the work.

namespace detail {
template <class Term>
double pairwise_sum_impl(std::size_t lo, std::size_t hi, const Term& term) {
  const std::size_t n = hi - lo;
  if (n <= 32) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum_impl(lo, mid, term) + pairwise_sum_impl(mid, hi, term);
}
}  // namespace detail

template <class Term>
double pairwise_sum(std::size_t n, const Term& term) {
  if (n == 0) return 0.0;
  return detail::pairwise_sum_impl(0, n, term);
}

double dot(const Vec& a, const Vec& b);
double nrm2(const Vec& a);
double nrm2_diff(const Vec& a, const Vec& b);  // ||a - b||

inline void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}
inline Vec scaled(const Vec& x, double alpha) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
  return r;
}
inline Vec vsub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}
inline Vec vadd(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}
// a*x + b*y
inline Vec lincomb(double a, const Vec& x, double b, const Vec& y) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + b * y[i];
  return r;
}

bool all_finite(const Vec& v);

// ulp distance between two doubles of the same sign; used by certificate
// recomputation tests.
std::uint64_t ulp_distance(double a, double b);

// ---------------------------------------------------------------------------
// Dense symmetric matrix, packed upper triangle (row major). Symmetry holds
// by storage design: M(i,j) and M(j,i) are the same array cell.

class DenseSymMatrix {
 public:
  DenseSymMatrix() = default;
  explicit DenseSymMatrix(std::size_t d) : d_(d), a_(d * (d + 1) / 2, 0.0) {}

  static DenseSymMatrix identity(std::size_t d, double scale = 1.0);
  // builds from a full row-major array; throws if it is not symmetric
  static DenseSymMatrix from_full(std::size_t d, const Vec& full,
                                  double sym_tol = 0.0);

  std::size_t order() const { return d_; }

  double at(std::size_t i, std::size_t j) const {
    return a_[i <= j ? idx(i, j) : idx(j, i)];
  }
  void set(std::size_t i, std::size_t j, double v) {
    a_[i <= j ? idx(i, j) : idx(j, i)] = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    a_[i <= j ? idx(i, j) : idx(j, i)] += v;
  }

  void add_shift(double s);  // += s*I
  void scale(double s);
  // += c * w w^T restricted to the given sparse support
  void add_scaled_outer(const std::uint32_t* idxs, const double* vals,
                        std::size_t nnz, double c);
  void add_scaled_outer(const Vec& w, double c);
  // this += alpha * other
  void add_scaled(const DenseSymMatrix& other, double alpha);

  Vec matvec(const Vec& x) const;
  double trace() const;
  double frob_norm() const;
  double quad_form(const Vec& v) const;  // v^T M v
  bool all_finite() const;

  const Vec& packed() const { return a_; }
  Vec& packed() { return a_; }

 private:
  std::size_t idx(std::size_t i, std::size_t j) const {
    // row i holds columns i..d-1 starting at i*d - i*(i-1)/2
    return i * d_ - i * (i - 1) / 2 + (j - i);
  }
  std::size_t d_ = 0;
  Vec a_;
};

// ---------------------------------------------------------------------------
// CSR sparse matrix for the data matrix of finite-sum problems.

class SparseRowMatrix {
 public:
  SparseRowMatrix() = default;
  SparseRowMatrix(std::size_t rows, std::size_t cols,
                  std::vector<std::size_t> offsets,
                  std::vector<std::uint32_t> indices, Vec values);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  std::size_t nnz() const { return values_.size(); }

  std::size_t row_nnz(std::size_t i) const {
    return offsets_[i + 1] - offsets_[i];
  }
  const std::uint32_t* row_indices(std::size_t i) const {
    return indices_.data() + offsets_[i];
  }
  const double* row_values(std::size_t i) const {
    return values_.data() + offsets_[i];
  }

  double row_dot(std::size_t i, const Vec& x) const;
  void add_scaled_row(std::size_t i, double c, Vec& y) const;
  double row_norm(std::size_t i) const;

  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<std::uint32_t>& indices() const { return indices_; }
  const Vec& values() const { return values_; }

 private:
  std::size_t n_ = 0, d_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> indices_;
  Vec values_;
};

// ---------------------------------------------------------------------------
// Certified linear solves.

struct SolveCertificate {
  Vec solution;
  double residual_norm = 0.0;  // ||M x - b||, recomputed from scratch
  int iterations = 0;
  bool converged = true;
};

// Largest problem the dense Cholesky path accepts.
inline constexpr std::size_t kDenseLimit = 4096;

// Cholesky factorization + solve for symmetric positive definite systems.
// Raises NotPositiveDefinite when a pivot drops below -1e-12*trace(M)/d.
SolveCertificate cholesky_solve(const DenseSymMatrix& M, const Vec& b);

// Conjugate gradients on an abstract SPD operator. Returns the best iterate
// with converged=false when max_iters runs out. Raises BreakdownDetected on
// directions of significant negative curvature.
SolveCertificate cg_solve(const std::function<Vec(const Vec&)>& apply,
                          const Vec& b, double tol, int max_iters);

// Power-iteration estimate of the spectral norm (largest |eigenvalue|).
double spectral_norm_upper(const DenseSymMatrix& M, int iters);

}  // namespace ianpe
