#include "stochlin/oracles.hpp"

#include "stochlin/error.hpp"

#include <cmath>

namespace stochlin {

namespace {

constexpr double kMaxCondition = 1e12;

Matrix checked_inverse(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidInput(std::string(what) + " must be square");
  const double c = condition_number(m);
  if (!(c < kMaxCondition)) {
    throw Singular(std::string(what) + " is singular or ill-conditioned (cond " +
                   std::to_string(c) + ")");
  }
  return m.partialPivLu().inverse();
}

}  // namespace

Matrix smw_inverse(const SmwInstance& inst) {
  const auto n = inst.M.rows();
  const auto q = inst.N.rows();
  if (inst.C.rows() != n || inst.C.cols() != q || inst.D.rows() != q || inst.D.cols() != n) {
    throw InvalidInput("SMW: inconsistent block dimensions");
  }
  const Matrix Minv = checked_inverse(inst.M, "M");
  const Matrix Ninv = checked_inverse(inst.N, "N");
  const Matrix inner = checked_inverse(Ninv + inst.D * Minv * inst.C, "N^{-1} + D M^{-1} C");
  return Minv - Minv * inst.C * inner * inst.D * Minv;
}

double psd_sandwich_identity(const Matrix& M, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("psd sandwich needs mu > 0");
  const auto eig = sym_eigendecomposition(M);
  const double tol = eig.values.size() ? 1e-12 * std::max(1.0, std::abs(eig.values(0))) : 0.0;
  // (M^+)^{1/2} and M^+ from the same eigenbasis.
  Vector inv = Vector::Zero(eig.values.size());
  Vector inv_half = Vector::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) > tol) {
      inv(i) = 1.0 / eig.values(i);
      inv_half(i) = 1.0 / std::sqrt(eig.values(i));
    }
  }
  const Matrix& V = eig.vectors;
  const Matrix Mp = V * inv.asDiagonal() * V.transpose();
  const Matrix Mph = V * inv_half.asDiagonal() * V.transpose();
  const auto n = M.rows();
  const Matrix inner = Matrix::Identity(n, n) + (1.0 / mu) * Mph * M * Mph;
  const Matrix lhs = Mph * inner.partialPivLu().inverse() * Mph;
  const Matrix rhs = (mu / (1.0 + mu)) * Mp;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

EigenBoundCheck range_restricted_eigen_check(const Matrix& EZ, const SpdOperator& B,
                                             const Vector& x, double rank_threshold_rel) {
  Matrix W = B.inv_sqrt() * EZ * B.inv_sqrt();
  W = 0.5 * (W + W.transpose());
  const auto eig = sym_eigendecomposition(W);
  const double lmax = eig.values(0);
  double lmin = lmax;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) > rank_threshold_rel * lmax) lmin = eig.values(i);
  }
  EigenBoundCheck c;
  c.quadratic = x.dot(W * x);
  c.bound = lmin * x.squaredNorm();
  c.holds = c.quadratic >= c.bound - 1e-9;
  return c;
}

bool range_restricted_eigen_bound(const Matrix& EZ, const SpdOperator& B, const Vector& x) {
  return range_restricted_eigen_check(EZ, B, x).holds;
}

}  // namespace stochlin
