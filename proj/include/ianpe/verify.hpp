#pragma once

#include <string>
#include <vector>

#include "ianpe/ans.hpp"

namespace ianpe {

// Exact resolvent y_B(lambda; x) = (I + lambda B)^{-1}(x) for the operators
// arising from the implemented problems, at diagnostic scale (d <= 50).
// Three operator choices:
//   FullOperator:         B = grad g + subdiff h
//   ExactLinearization:   B = grad g(anchor) + hess g(anchor)(. - anchor) + subdiff h
//   InexactLinearization: same with a supplied PSD matrix in place of hess g
class ResolventOracle {
 public:
  enum class Operator { FullOperator, ExactLinearization, InexactLinearization };

  static ResolventOracle full(const CompositeProblem& p, double tol = 1e-13);
  static ResolventOracle linearized(const CompositeProblem& p, Vec anchor,
                                    double tol = 1e-13);
  static ResolventOracle linearized_inexact(const CompositeProblem& p,
                                            Vec anchor, DenseSymMatrix H,
                                            double tol = 1e-13);

  // y with ||lambda v + y - x|| <= tol * scale, v the operator value at y
  Vec resolve(double lambda, const Vec& x) const;
  double phi(double lambda, const Vec& x) const;  // lambda ||y - x||

  Operator op() const { return op_; }

 private:
  ResolventOracle(const CompositeProblem& p, Operator op, double tol)
      : p_(&p), op_(op), tol_(tol) {}
  Vec resolve_linear(double lambda, const Vec& x) const;
  Vec resolve_full_smooth(double lambda, const Vec& x) const;
  Vec resolve_apg(double lambda, const Vec& x) const;

  const CompositeProblem* p_;
  Operator op_;
  Vec anchor_;
  DenseSymMatrix H_;
  double tol_;
};

struct CheckReport {
  std::string name;
  bool pass = true;
  double margin = 0.0;  // smallest normalized slack across asserted sides
  std::string detail;
};

std::string format_report(const CheckReport& r);

// (lambda/lt) phi(lt;x) <= phi(lambda;x) <= (lambda/lt)^2 phi(lt;x), lt <= lambda
CheckReport check_phi_monotonicity(const ResolventOracle& oracle, const Vec& x,
                                   double lambda_tilde, double lambda,
                                   double slack = 1e-9);

// (1-sigma) lambda ||y-x|| <= phi(lambda;x) <= (1+sigma) lambda ||y-x||
CheckReport check_phi_sandwich(const ResolventOracle& oracle, double lambda,
                               const Vec& x, const Vec& y, double eps,
                               double sigma, double slack = 1e-9);

// |phi_B(lambda,x) - phi_B~(lambda,x~)| bounded through the displacement of
// the linearization point; B, B~ are inexact linearizations at x, x~ with the
// matrices Hx, Hxt (error below delta, lambda*delta <= C).
CheckReport check_phi_shift(const CompositeProblem& p, const DenseSymMatrix& Hx,
                            const DenseSymMatrix& Hxt, double lambda,
                            const Vec& x, const Vec& x_tilde, double delta,
                            double C, double slack = 1e-9);

// phi_B(lambda;x) <= [2 Lh lambda^2 + lambda d + lambda^2 L2 d^2]/(1-C),
// d = ||x - x*||, B the inexact linearization at x.
CheckReport check_phi_distance_bound(const CompositeProblem& p,
                                     const DenseSymMatrix& Hx, double lambda,
                                     const Vec& x, const Vec& xstar,
                                     double delta, double C,
                                     double slack = 1e-9);

// Seeded random battery over small logistic instances: runs all four checks
// per instance, with deliberately inexact linearizations where the bounds
// allow them.
struct BatterySummary {
  std::size_t instances = 0;
  std::size_t checks_run = 0;
  std::size_t failures = 0;
  double min_margin = 0.0;
};
BatterySummary run_phi_batteries(std::size_t instances, std::uint64_t seed,
                                 std::size_t d_max,
                                 std::vector<CheckReport>* failures_out = nullptr,
                                 std::vector<CheckReport>* all_out = nullptr);

}  // namespace ianpe
