#include "stochlin/system.hpp"

#include "stochlin/error.hpp"

#include <string>

namespace stochlin {

LinearSystem::LinearSystem(Matrix A, Vector b, SpdOperator B, double consistency_tol)
    : A_(std::move(A)), b_(std::move(b)), B_(std::move(B)) {
  if (A_.rows() == 0 || A_.cols() == 0) throw InvalidInput("A must be non-empty");
  if (A_.rows() != b_.size()) throw InvalidInput("A has " + std::to_string(A_.rows()) +
                                                 " rows but b has length " +
                                                 std::to_string(b_.size()));
  if (static_cast<std::size_t>(A_.cols()) != B_.dim()) {
    throw InvalidInput("B must be n x n with n = cols(A)");
  }
  require_finite(A_, "A");
  require_finite(b_, "b");
  A_pinv_B_ = b_pseudoinverse(A_, B_);
  const double residual = (A_ * (A_pinv_B_ * b_) - b_).norm();
  if (residual > consistency_tol * (1.0 + b_.norm())) {
    throw Inconsistent("linear system is inconsistent: residual " + std::to_string(residual) +
                           " of the least-B-norm solution",
                       residual);
  }
}

Vector LinearSystem::project(const Vector& x) const {
  if (x.size() != A_.cols()) throw InvalidInput("projection: dimension mismatch");
  return x - A_pinv_B_ * (A_ * x - b_);
}

}  // namespace stochlin
