#pragma once

// Numerical checks of the auxiliary matrix lemmas the solvers rely on. The
// main code path never calls these.

#include "stochlin/linalg.hpp"

namespace stochlin {

struct SmwInstance {
  Matrix M;  // n x n, invertible
  Matrix C;  // n x q
  Matrix N;  // q x q, invertible
  Matrix D;  // q x n
};

// M^{-1} - M^{-1} C (N^{-1} + D M^{-1} C)^{-1} D M^{-1}. Throws Singular when M,
// N or the inner matrix has condition number above 1e12.
Matrix smw_inverse(const SmwInstance& inst);

// max |lhs - rhs| for
//   (M^+)^{1/2} (I + (1/mu) (M^+)^{1/2} M (M^+)^{1/2})^{-1} (M^+)^{1/2} = mu/(1+mu) M^+.
double psd_sandwich_identity(const Matrix& M, double mu);

struct EigenBoundCheck {
  bool holds = false;
  double quadratic = 0.0;  // x^T W x
  double bound = 0.0;      // lambda_min+(W) x^T x
};

// x^T W x >= lambda_min+(W) x^T x - 1e-9 with W = B^{-1/2} EZ B^{-1/2}, for x in
// range(B^{-1/2} A^T) (the caller's responsibility).
EigenBoundCheck range_restricted_eigen_check(const Matrix& EZ, const SpdOperator& B,
                                             const Vector& x, double rank_threshold_rel = 1e-10);
bool range_restricted_eigen_bound(const Matrix& EZ, const SpdOperator& B, const Vector& x);

}  // namespace stochlin
