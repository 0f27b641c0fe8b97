#pragma once

#include <cstdint>

#include "ianpe/problem.hpp"

namespace ianpe {

struct LogisticGenOptions {
  std::size_t n = 200;
  std::size_t d = 10;
  std::uint64_t seed = 1;
  double density = 1.0;     // fraction of nonzero features per row
  double row_scale = 1.0;   // max row norm
  double signal = 3.0;      // norm scale of the planted direction
  double align = 0.0;       // feature correlation with the planted direction
  double alpha = 1e-5;
};

// Rows on the sphere of radius <= row_scale, labels drawn from the logistic
// model of a planted direction (keeps the instances non-separable and the
// minimizers finite). align > 0 mixes a +-planted component into every row,
// mimicking features that correlate with the discriminant.
LogisticRegression gen_logistic(const LogisticGenOptions& opt,
                                Vec* planted_out = nullptr);

// Q = G^T G / d + mu I with Gaussian G; positive definite.
QuadraticProblem gen_quadratic(std::size_t d, std::uint64_t seed,
                               double mu = 1.0);

struct Reference {
  Vec xstar;
  double fstar = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

// Damped-Newton reference solve of a smooth problem to ||grad f|| <= tol.
Reference reference_minimizer(const CompositeProblem& p, const Vec& x0,
                              double tol = 1e-12, int max_iter = 500);

}  // namespace ianpe
