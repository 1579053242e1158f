#pragma once

#include "stochlin/linalg.hpp"

namespace stochlin {

// A consistent linear system A x = b together with the geometry B.
// Construction validates dimensions and consistency; instances are immutable.
class LinearSystem {
 public:
  LinearSystem(Matrix A, Vector b, SpdOperator B, double consistency_tol = 1e-8);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  const SpdOperator& B() const { return B_; }
  std::size_t rows() const { return static_cast<std::size_t>(A_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(A_.cols()); }

  AffineSet solution_set() const { return {A_, b_}; }

  // Pi_L^B(x).
  Vector project(const Vector& x) const;

 private:
  Matrix A_;
  Vector b_;
  SpdOperator B_;
  Matrix A_pinv_B_;  // A^{dagger_B}
};

}  // namespace stochlin
