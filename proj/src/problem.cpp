#include "ianpe/problem.hpp"

#include <algorithm>
#include <cmath>

#include "ianpe/rng.hpp"

namespace ianpe {

namespace {

// log(1 + exp(-t)) without overflow for large |t|
inline double logistic_loss(double t) {
  return std::log1p(std::exp(-std::fabs(t))) + std::max(-t, 0.0);
}

// sigma(-t) = 1/(1+exp(t)), the magnitude of d/dt log(1+exp(-t))
inline double sigmoid_neg(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

// sigma'(t) = sigma(t) (1 - sigma(t))
inline double sigmoid_deriv(double t) {
  const double s = sigmoid_neg(t);  // = 1 - sigma(t)
  return s * (1.0 - s);
}

}  // namespace

// ---------------------------------------------------------------------------
// NonSmooth

double NonSmooth::eval(const Vec& x) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::L1:
      return mu * pairwise_sum(x.size(),
                               [&](std::size_t i) { return std::fabs(x[i]); });
  }
  return 0.0;
}

Vec NonSmooth::prox(const Vec& z, double tau) const {
  switch (kind) {
    case Kind::Zero:
      return z;
    case Kind::L1: {
      Vec y(z.size());
      const double t = mu * tau;
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z[i] > t)
          y[i] = z[i] - t;
        else if (z[i] < -t)
          y[i] = z[i] + t;
        else
          y[i] = 0.0;
      }
      return y;
    }
  }
  return z;
}

double NonSmooth::lipschitz(std::size_t dim) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::L1:
      return mu * std::sqrt(static_cast<double>(dim));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// CompositeProblem

double CompositeProblem::value_and_grad(const Vec& x, Vec& grad) const {
  grad = grad_g(x);
  return eval_g(x);
}

DenseSymMatrix CompositeProblem::subsample_hess(
    const Vec&, const std::vector<std::uint32_t>&) const {
  throw ConfigError("problem has no finite-sum structure");
}

DenseSymMatrix CompositeProblem::sketch_hess(const Vec&, const Vec&,
                                             std::size_t) const {
  throw ConfigError("problem has no square-root Hessian factor");
}

Vec CompositeProblem::subgrad_from_prox(const Vec& z, double tau,
                                        const Vec& y) const {
  if (tau <= 0.0) throw InvalidTolerance("subgrad_from_prox: tau > 0");
  Vec s(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) s[i] = (z[i] - y[i]) / tau;
  return s;
}

// ---------------------------------------------------------------------------
// LogisticRegression

LogisticRegression::LogisticRegression(SparseRowMatrix data, Vec labels,
                                       double alpha)
    : data_(std::move(data)), labels_(std::move(labels)), alpha_(alpha) {
  if (labels_.size() != data_.rows())
    throw DimensionMismatch("LogisticRegression: labels vs rows");
  if (alpha_ < 0.0) throw ConfigError("LogisticRegression: alpha >= 0");
  for (double b : labels_)
    if (b != 1.0 && b != -1.0)
      throw NonBinaryLabel("LogisticRegression: labels must be +-1");
  for (std::size_t i = 0; i < data_.rows(); ++i)
    max_row_norm_ = std::max(max_row_norm_, data_.row_norm(i));
  auto [l1, l2] = lipschitz_bounds(data_, alpha_);
  l1_ = l1;
  l2_ = l2;
}

std::pair<double, double> lipschitz_bounds(const SparseRowMatrix& data,
                                           double alpha) {
  double max_norm = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i)
    max_norm = std::max(max_norm, data.row_norm(i));
  const double l1 = 0.25 * max_norm * max_norm + alpha;
  // |sigma''| <= 1/(6 sqrt 3) globally
  const double c3 = 1.0 / (6.0 * std::sqrt(3.0));
  const double l2 = c3 * max_norm * max_norm * max_norm;
  return {l1, l2};
}

double LogisticRegression::eval_g(const Vec& x) const {
  if (x.size() != dim()) throw DimensionMismatch("logreg eval_g: dim");
  const std::size_t n = data_.rows();
  const double loss = pairwise_sum(
      n, [&](std::size_t i) { return logistic_loss(margin(i, x)); });
  const double sq = pairwise_sum(x.size(), [&](std::size_t i) {
    return x[i] * x[i];
  });
  return loss / static_cast<double>(n) + 0.5 * alpha_ * sq;
}

Vec LogisticRegression::grad_g(const Vec& x) const {
  Vec g;
  value_and_grad(x, g);
  return g;
}

double LogisticRegression::value_and_grad(const Vec& x, Vec& grad) const {
  if (x.size() != dim()) throw DimensionMismatch("logreg grad: dim");
  const std::size_t n = data_.rows();
  grad.assign(dim(), 0.0);
  Vec losses(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = margin(i, x);
    losses[i] = logistic_loss(t);
    const double c = -sigmoid_neg(t) * labels_[i] / static_cast<double>(n);
    data_.add_scaled_row(i, c, grad);
  }
  axpy(alpha_, x, grad);
  const double loss = pairwise_sum(n, [&](std::size_t i) { return losses[i]; });
  const double sq =
      pairwise_sum(x.size(), [&](std::size_t i) { return x[i] * x[i]; });
  return loss / static_cast<double>(n) + 0.5 * alpha_ * sq;
}

DenseSymMatrix LogisticRegression::hess_g(const Vec& x) const {
  if (x.size() != dim()) throw DimensionMismatch("logreg hess: dim");
  const std::size_t n = data_.rows();
  DenseSymMatrix H(dim());
  for (std::size_t i = 0; i < n; ++i) {
    const double c = sigmoid_deriv(margin(i, x)) / static_cast<double>(n);
    H.add_scaled_outer(data_.row_indices(i), data_.row_values(i),
                       data_.row_nnz(i), c);
  }
  H.add_shift(alpha_);
  return H;
}

DenseSymMatrix LogisticRegression::subsample_hess(
    const Vec& x, const std::vector<std::uint32_t>& S) const {
  if (x.size() != dim()) throw DimensionMismatch("logreg subsample: dim");
  if (S.empty()) throw ConfigError("subsample_hess: empty sample");
  DenseSymMatrix H(dim());
  const double inv = 1.0 / static_cast<double>(S.size());
  for (std::uint32_t j : S) {
    const double c = sigmoid_deriv(margin(j, x)) * inv;
    H.add_scaled_outer(data_.row_indices(j), data_.row_values(j),
                       data_.row_nnz(j), c);
  }
  H.add_shift(alpha_);
  return H;
}

DenseSymMatrix LogisticRegression::sketch_hess(const Vec& x, const Vec& S,
                                               std::size_t m) const {
  const std::size_t n = data_.rows();
  const std::size_t d = dim();
  if (S.size() != m * n) throw DimensionMismatch("sketch_hess: S is m x n");
  // rows of B: sqrt(sigma'(t_i)/n) w_i; compute SB (m x d) then (SB)^T (SB)
  Vec coef(n);
  for (std::size_t i = 0; i < n; ++i)
    coef[i] =
        std::sqrt(sigmoid_deriv(margin(i, x)) / static_cast<double>(n));
  Vec sb(m * d, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    Vec row(sb.begin() + k * d, sb.begin() + (k + 1) * d);
    for (std::size_t i = 0; i < n; ++i)
      data_.add_scaled_row(i, S[k * n + i] * coef[i], row);
    std::copy(row.begin(), row.end(), sb.begin() + k * d);
  }
  DenseSymMatrix H(d);
  for (std::size_t k = 0; k < m; ++k)
    H.add_scaled_outer(Vec(sb.begin() + k * d, sb.begin() + (k + 1) * d), 1.0);
  H.add_shift(alpha_);
  return H;
}

// ---------------------------------------------------------------------------
// QuadraticProblem

QuadraticProblem::QuadraticProblem(DenseSymMatrix Q, Vec c)
    : Q_(std::move(Q)), c_(std::move(c)) {
  if (Q_.order() != c_.size())
    throw DimensionMismatch("QuadraticProblem: Q vs c");
  l1_ = Q_.order() == 0 ? 0.0 : spectral_norm_upper(Q_, 200);
}

double QuadraticProblem::eval_g(const Vec& x) const {
  return 0.5 * Q_.quad_form(x) + dot(c_, x);
}

Vec QuadraticProblem::grad_g(const Vec& x) const {
  Vec g = Q_.matvec(x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += c_[i];
  return g;
}

Vec QuadraticProblem::minimizer() const {
  return cholesky_solve(Q_, scaled(c_, -1.0)).solution;
}

// ---------------------------------------------------------------------------
// fd_check

FdReport fd_check(const CompositeProblem& p, const Vec& x,
                  std::uint64_t probe_seed, int num_probes) {
  const std::size_t d = p.dim();
  const double hstep = 1e-5 * (1.0 + nrm2(x));
  const Vec grad = p.grad_g(x);
  const double gscale = std::max(1.0, nrm2(grad));

  FdReport rep;
  Vec xp = x, xm = x;
  for (std::size_t i = 0; i < d; ++i) {
    xp[i] = x[i] + hstep;
    xm[i] = x[i] - hstep;
    const double fd = (p.eval_g(xp) - p.eval_g(xm)) / (2.0 * hstep);
    rep.grad_rel_err =
        std::max(rep.grad_rel_err, std::fabs(fd - grad[i]) / gscale);
    xp[i] = x[i];
    xm[i] = x[i];
  }

  const DenseSymMatrix H = p.hess_g(x);
  Rng rng(probe_seed);
  for (int t = 0; t < num_probes; ++t) {
    Vec v(d);
    for (auto& vi : v) vi = rng.next_gaussian();
    const double vn = nrm2(v);
    if (vn == 0.0) continue;
    for (auto& vi : v) vi /= vn;
    Vec xpv = x, xmv = x;
    axpy(hstep, v, xpv);
    axpy(-hstep, v, xmv);
    const Vec gp = p.grad_g(xpv);
    const Vec gm = p.grad_g(xmv);
    const Vec hv = H.matvec(v);
    const double hscale = std::max(1.0, nrm2(hv));
    for (std::size_t i = 0; i < d; ++i) {
      const double fd = (gp[i] - gm[i]) / (2.0 * hstep);
      rep.hess_rel_err =
          std::max(rep.hess_rel_err, std::fabs(fd - hv[i]) / hscale);
    }
  }
  return rep;
}

}  // namespace ianpe
