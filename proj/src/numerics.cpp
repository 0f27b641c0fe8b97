#include "ianpe/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "ianpe/rng.hpp"

namespace ianpe {

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  return pairwise_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double nrm2(const Vec& a) {
  return std::sqrt(
      pairwise_sum(a.size(), [&](std::size_t i) { return a[i] * a[i]; }));
}

double nrm2_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("nrm2_diff: size mismatch");
  return std::sqrt(pairwise_sum(a.size(), [&](std::size_t i) {
    const double d = a[i] - b[i];
    return d * d;
  }));
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::uint64_t ulp_distance(double a, double b) {
  if (a == b) return 0;
  if (std::signbit(a) != std::signbit(b) || !std::isfinite(a) ||
      !std::isfinite(b))
    return std::numeric_limits<std::uint64_t>::max();
  const auto ia = std::bit_cast<std::uint64_t>(std::fabs(a));
  const auto ib = std::bit_cast<std::uint64_t>(std::fabs(b));
  return ia > ib ? ia - ib : ib - ia;
}

// ---------------------------------------------------------------------------
// DenseSymMatrix

DenseSymMatrix DenseSymMatrix::identity(std::size_t d, double scale) {
  DenseSymMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) m.set(i, i, scale);
  return m;
}

DenseSymMatrix DenseSymMatrix::from_full(std::size_t d, const Vec& full,
                                         double sym_tol) {
  if (full.size() != d * d)
    throw DimensionMismatch("from_full: array is not d*d");
  DenseSymMatrix m(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double upper = full[i * d + j];
      const double lower = full[j * d + i];
      if (std::fabs(upper - lower) > sym_tol)
        throw DimensionMismatch("from_full: input not symmetric");
      if (!std::isfinite(upper))
        throw NumericalFailure("from_full: non-finite entry");
      m.set(i, j, upper);
    }
  }
  return m;
}

void DenseSymMatrix::add_shift(double s) {
  for (std::size_t i = 0; i < d_; ++i) a_[idx(i, i)] += s;
}

void DenseSymMatrix::scale(double s) {
  for (double& v : a_) v *= s;
}

void DenseSymMatrix::add_scaled_outer(const std::uint32_t* idxs,
                                      const double* vals, std::size_t nnz,
                                      double c) {
  for (std::size_t p = 0; p < nnz; ++p) {
    const std::size_t i = idxs[p];
    const double ci = c * vals[p];
    double* row = a_.data() + idx(i, i) - i;  // base pointer for row i
    for (std::size_t q = p; q < nnz; ++q) row[idxs[q]] += ci * vals[q];
  }
}

void DenseSymMatrix::add_scaled_outer(const Vec& w, double c) {
  if (w.size() != d_) throw DimensionMismatch("add_scaled_outer: dim");
  for (std::size_t i = 0; i < d_; ++i) {
    const double ci = c * w[i];
    double* row = a_.data() + idx(i, i) - i;
    for (std::size_t j = i; j < d_; ++j) row[j] += ci * w[j];
  }
}

void DenseSymMatrix::add_scaled(const DenseSymMatrix& other, double alpha) {
  if (other.d_ != d_) throw DimensionMismatch("add_scaled: order mismatch");
  for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += alpha * other.a_[k];
}

Vec DenseSymMatrix::matvec(const Vec& x) const {
  if (x.size() != d_) throw DimensionMismatch("matvec: dim mismatch");
  Vec y(d_);
  for (std::size_t i = 0; i < d_; ++i)
    y[i] = pairwise_sum(d_, [&](std::size_t j) { return at(i, j) * x[j]; });
  return y;
}

double DenseSymMatrix::trace() const {
  return pairwise_sum(d_, [&](std::size_t i) { return at(i, i); });
}

double DenseSymMatrix::frob_norm() const {
  // off-diagonal cells count twice
  const double s = pairwise_sum(a_.size(), [&](std::size_t k) {
    return 2.0 * a_[k] * a_[k];
  });
  const double diag =
      pairwise_sum(d_, [&](std::size_t i) { return at(i, i) * at(i, i); });
  return std::sqrt(s - diag);
}

double DenseSymMatrix::quad_form(const Vec& v) const {
  return dot(v, matvec(v));
}

bool DenseSymMatrix::all_finite() const {
  for (double v : a_)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// SparseRowMatrix

SparseRowMatrix::SparseRowMatrix(std::size_t rows, std::size_t cols,
                                 std::vector<std::size_t> offsets,
                                 std::vector<std::uint32_t> indices,
                                 Vec values)
    : n_(rows),
      d_(cols),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  if (offsets_.size() != n_ + 1)
    throw DimensionMismatch("SparseRowMatrix: offsets size");
  for (std::size_t i = 0; i < n_; ++i)
    if (offsets_[i + 1] < offsets_[i])
      throw DimensionMismatch("SparseRowMatrix: offsets not nondecreasing");
  if (offsets_.back() != indices_.size() || indices_.size() != values_.size())
    throw DimensionMismatch("SparseRowMatrix: ragged arrays");
  for (std::uint32_t j : indices_)
    if (j >= d_) throw DimensionMismatch("SparseRowMatrix: column out of range");
  for (double v : values_)
    if (!std::isfinite(v))
      throw NumericalFailure("SparseRowMatrix: non-finite value");
}

double SparseRowMatrix::row_dot(std::size_t i, const Vec& x) const {
  const auto* idxs = row_indices(i);
  const auto* vals = row_values(i);
  return pairwise_sum(row_nnz(i),
                      [&](std::size_t p) { return vals[p] * x[idxs[p]]; });
}

void SparseRowMatrix::add_scaled_row(std::size_t i, double c, Vec& y) const {
  const auto* idxs = row_indices(i);
  const auto* vals = row_values(i);
  const std::size_t nnz = row_nnz(i);
  for (std::size_t p = 0; p < nnz; ++p) y[idxs[p]] += c * vals[p];
}

double SparseRowMatrix::row_norm(std::size_t i) const {
  const auto* vals = row_values(i);
  return std::sqrt(pairwise_sum(
      row_nnz(i), [&](std::size_t p) { return vals[p] * vals[p]; }));
}

// ---------------------------------------------------------------------------
// cholesky_solve

namespace {

// Packed upper Cholesky: M = U^T U, U stored packed row major.
// Returns false and sets *bad_pivot when a pivot fails the PSD test.
bool packed_cholesky(std::size_t d, Vec& a, double pivot_floor,
                     double* bad_pivot) {
  auto idx = [d](std::size_t i, std::size_t j) {
    return i * d - i * (i - 1) / 2 + (j - i);
  };
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const double s = pairwise_sum(i, [&](std::size_t k) {
        return a[idx(k, i)] * a[idx(k, j)];
      });
      double v = a[idx(i, j)] - s;
      if (j == i) {
        if (v < pivot_floor || v <= 0.0) {
          *bad_pivot = v;
          return false;
        }
        a[idx(i, i)] = std::sqrt(v);
      } else {
        a[idx(i, j)] = v / a[idx(i, i)];
      }
    }
  }
  return true;
}

Vec packed_cholesky_apply(std::size_t d, const Vec& u, const Vec& b) {
  auto idx = [d](std::size_t i, std::size_t j) {
    return i * d - i * (i - 1) / 2 + (j - i);
  };
  // forward: U^T z = b
  Vec z(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double s =
        pairwise_sum(i, [&](std::size_t k) { return u[idx(k, i)] * z[k]; });
    z[i] = (b[i] - s) / u[idx(i, i)];
  }
  // backward: U x = z
  Vec x(d);
  for (std::size_t ii = d; ii-- > 0;) {
    const double s = pairwise_sum(d - ii - 1, [&](std::size_t t) {
      const std::size_t j = ii + 1 + t;
      return u[idx(ii, j)] * x[j];
    });
    x[ii] = (z[ii] - s) / u[idx(ii, ii)];
  }
  return x;
}

}  // namespace

SolveCertificate cholesky_solve(const DenseSymMatrix& M, const Vec& b) {
  const std::size_t d = M.order();
  if (b.size() != d) throw DimensionMismatch("cholesky_solve: rhs dim");
  if (d > kDenseLimit)
    throw DimensionMismatch("cholesky_solve: order exceeds dense limit 4096");
  if (d == 0) return SolveCertificate{};

  const double pivot_floor = -1e-12 * M.trace() / static_cast<double>(d);
  Vec factor = M.packed();
  double bad_pivot = 0.0;
  if (!packed_cholesky(d, factor, pivot_floor, &bad_pivot))
    throw NotPositiveDefinite("cholesky_solve: pivot " +
                              std::to_string(bad_pivot) + " below floor");

  Vec x = packed_cholesky_apply(d, factor, b);

  auto residual_of = [&](const Vec& sol) {
    const Vec mx = M.matvec(sol);
    return nrm2_diff(mx, b);
  };
  double resid = residual_of(x);
  const double bound = 1e-10 * (nrm2(b) + M.frob_norm() * nrm2(x));
  if (resid > bound) {
    // one refinement pass before giving up
    Vec r = vsub(M.matvec(x), b);
    Vec dx = packed_cholesky_apply(d, factor, r);
    for (std::size_t i = 0; i < d; ++i) x[i] -= dx[i];
    resid = residual_of(x);
    if (resid > bound || !std::isfinite(resid))
      throw NumericalFailure("cholesky_solve: residual " +
                             std::to_string(resid) + " exceeds certificate");
  }
  return SolveCertificate{std::move(x), resid, 1, true};
}

// ---------------------------------------------------------------------------
// cg_solve

SolveCertificate cg_solve(const std::function<Vec(const Vec&)>& apply,
                          const Vec& b, double tol, int max_iters) {
  if (tol <= 0.0) throw InvalidTolerance("cg_solve: tol must be positive");
  const std::size_t d = b.size();
  const double bnorm = nrm2(b);
  Vec x(d, 0.0);
  if (bnorm == 0.0) return SolveCertificate{std::move(x), 0.0, 0, true};

  Vec r = b;  // residual of x = 0
  Vec p = r;
  double rr = dot(r, r);
  Vec best = x;
  double best_res = std::sqrt(rr);
  int it = 0;
  for (; it < max_iters; ++it) {
    if (best_res <= tol * bnorm) break;
    const Vec ap = apply(p);
    if (ap.size() != d) throw DimensionMismatch("cg_solve: operator dim");
    const double pap = dot(p, ap);
    if (pap <= 0.0) {
      if (best_res <= tol * bnorm) break;
      throw BreakdownDetected("cg_solve: p^T A p = " + std::to_string(pap) +
                              ", operator not PSD on search direction");
    }
    const double alpha = rr / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rr_next = dot(r, r);
    const double res = std::sqrt(rr_next);
    if (!std::isfinite(res)) throw NumericalFailure("cg_solve: diverged");
    if (res < best_res) {
      best_res = res;
      best = x;
    }
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < d; ++i) p[i] = r[i] + beta * p[i];
  }

  // recompute the certificate from scratch on the reported iterate
  const Vec ax = apply(best);
  const double resid = nrm2_diff(ax, b);
  return SolveCertificate{std::move(best), resid, it, resid <= tol * bnorm};
}

// ---------------------------------------------------------------------------
// spectral_norm_upper

namespace {

// Largest-magnitude eigenvalue of a symmetric tridiagonal matrix by Sturm
// bisection. alpha holds the diagonal, beta the subdiagonal.
double tridiag_abs_max(const Vec& alpha, const Vec& beta) {
  const std::size_t m = alpha.size();
  // Gershgorin enclosure
  double lo = alpha[0], hi = alpha[0];
  for (std::size_t i = 0; i < m; ++i) {
    const double bl = i > 0 ? std::fabs(beta[i - 1]) : 0.0;
    const double br = i + 1 < m ? std::fabs(beta[i]) : 0.0;
    lo = std::min(lo, alpha[i] - bl - br);
    hi = std::max(hi, alpha[i] + bl + br);
  }
  // number of eigenvalues strictly below x
  auto count_below = [&](double x) {
    std::size_t count = 0;
    double q = alpha[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < m; ++i) {
      const double b2 = beta[i - 1] * beta[i - 1];
      const double denom = q == 0.0 ? 1e-300 : q;
      q = alpha[i] - x - b2 / denom;
      if (q < 0.0) ++count;
    }
    return count;
  };
  auto extreme = [&](bool largest) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * (std::fabs(a) + std::fabs(b) +
                                                  1e-300);
         ++it) {
      const double mid = 0.5 * (a + b);
      const std::size_t below = count_below(mid);
      if (largest ? below < m : below < 1)
        a = mid;
      else
        b = mid;
    }
    return 0.5 * (a + b);
  };
  return std::max(std::fabs(extreme(true)), std::fabs(extreme(false)));
}

}  // namespace

double spectral_norm_upper(const DenseSymMatrix& M, int iters) {
  if (iters < 1) throw InvalidTolerance("spectral_norm_upper: iters >= 1");
  const std::size_t d = M.order();
  if (d == 0) return 0.0;

  // Krylov (Lanczos) refinement of the power estimate with full
  // reorthogonalization: exact for d <= iters, near-tight otherwise.
  const std::size_t m_max = std::min<std::size_t>(d, static_cast<std::size_t>(iters));
  double best = 0.0;
  for (std::uint64_t restart = 0; restart < 3; ++restart) {
    Rng rng(0x5eedbeefULL, 0x9a0e, restart);
    std::vector<Vec> basis;
    Vec v(d);
    for (auto& vi : v) vi = rng.next_gaussian();
    double vn = nrm2(v);
    if (vn == 0.0) continue;
    for (auto& vi : v) vi /= vn;

    Vec alpha, beta;
    for (std::size_t k = 0; k < m_max; ++k) {
      basis.push_back(v);
      Vec w = M.matvec(v);
      const double a = dot(v, w);
      alpha.push_back(a);
      // full reorthogonalization keeps the basis numerically orthonormal
      for (const Vec& q : basis) axpy(-dot(q, w), q, w);
      for (const Vec& q : basis) axpy(-dot(q, w), q, w);
      const double b = nrm2(w);
      if (b <= 1e-14 * std::max(1.0, std::fabs(a)) || k + 1 == m_max) break;
      beta.push_back(b);
      for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / b;
    }
    if (!alpha.empty()) best = std::max(best, tridiag_abs_max(alpha, beta));
  }
  return best;
}

}  // namespace ianpe
