#include "stochlin/linalg.hpp"

#include "stochlin/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stochlin {

namespace {

Eigen::BDCSVD<Matrix> thin_svd(const Matrix& m) {
  return Eigen::BDCSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput(std::string(what) + " must be a non-empty square matrix");
  }
}

}  // namespace

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

double asymmetry(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

Matrix pseudoinverse(const Matrix& m, std::optional<double> rel_tol) {
  require_finite(m, "pseudoinverse input");
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  const double tol = rel_tol.value_or(std::numeric_limits<double>::epsilon() *
                                      static_cast<double>(std::max(m.rows(), m.cols())));
  if (m.rows() == 1 && m.cols() == 1) {
    // scalar fast path, hot in coordinate-sketch iterations
    const double v = m(0, 0);
    Matrix out(1, 1);
    out(0, 0) = v == 0.0 ? 0.0 : 1.0 / v;
    return out;
  }
  const auto svd = thin_svd(m);
  const Vector& s = svd.singularValues();
  const double cutoff = tol * (s.size() > 0 ? s(0) : 0.0);
  Vector inv_s = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv_s(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().transpose();
}

SymmetricEigen sym_eigendecomposition(const Matrix& m) {
  require_square(m, "eigendecomposition input");
  require_finite(m, "eigendecomposition input");
  if (asymmetry(m) > 1e-10) throw InvalidInput("eigendecomposition input is not symmetric");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw InvalidInput("symmetric eigensolver failed");
  // Eigen returns ascending order
  const Eigen::Index n = sym.rows();
  SymmetricEigen out{Matrix(n, n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

SpdOperator::SpdOperator(const Matrix& base) : base_(base) {
  require_square(base, "B");
  require_finite(base, "B");
  if (asymmetry(base) > 1e-12) throw InvalidInput("B is not symmetric");
  const auto eig = sym_eigendecomposition(base);
  const double lmax = eig.values(0);
  const double lmin = eig.values(eig.values.size() - 1);
  if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) {
    throw InvalidInput("B is not positive definite (smallest eigenvalue " + std::to_string(lmin) +
                       ")");
  }
  const Matrix& U = eig.vectors;
  const Vector s = eig.values.cwiseSqrt();
  sqrt_ = U * s.asDiagonal() * U.transpose();
  inv_sqrt_ = U * s.cwiseInverse().asDiagonal() * U.transpose();
  inverse_ = U * eig.values.cwiseInverse().asDiagonal() * U.transpose();
  base_ = 0.5 * (base_ + base_.transpose());
  identity_ = base_.isIdentity(0.0);
  if (identity_) {
    const auto n = base_.rows();
    sqrt_ = inv_sqrt_ = inverse_ = Matrix::Identity(n, n);
  }
}

SpdOperator SpdOperator::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return SpdOperator(Matrix::Identity(k, k));
}

SpdOperator SpdOperator::diagonal(const Vector& d) { return SpdOperator(Matrix(d.asDiagonal())); }

Vector SpdOperator::apply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw InvalidInput("B: dimension mismatch");
  return identity_ ? x : Vector(base_ * x);
}

Vector SpdOperator::solve(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw InvalidInput("B: dimension mismatch");
  return identity_ ? x : Vector(inverse_ * x);
}

Matrix SpdOperator::solve(const Matrix& x) const {
  if (static_cast<std::size_t>(x.rows()) != dim()) throw InvalidInput("B: dimension mismatch");
  return identity_ ? x : Matrix(inverse_ * x);
}

double SpdOperator::inner(const Vector& x, const Vector& y) const { return x.dot(apply(y)); }

double SpdOperator::norm_sq(const Vector& x) const { return inner(x, x); }

double SpdOperator::norm(const Vector& x) const { return std::sqrt(std::max(0.0, norm_sq(x))); }

double b_norm(const Vector& x, const SpdOperator& B) { return B.norm(x); }

double psd_quadratic_form(const Vector& x, const Matrix& M) {
  if (M.rows() != x.size() || M.cols() != x.size()) {
    throw InvalidInput("quadratic form: dimension mismatch");
  }
  return x.dot(M * x);
}

Matrix b_pseudoinverse(const Matrix& m, const SpdOperator& B) {
  if (static_cast<std::size_t>(m.cols()) != B.dim()) {
    throw InvalidInput("B-pseudoinverse: M must have B.dim() columns");
  }
  const Matrix binv_mt = B.solve(Matrix(m.transpose()));
  const Matrix inner = m * binv_mt;
  return binv_mt * pseudoinverse(0.5 * (inner + inner.transpose()));
}

double consistency_residual(const AffineSet& set, const SpdOperator& B) {
  if (set.A.rows() != set.b.size()) throw InvalidInput("affine set: A rows must match b length");
  const Vector candidate = b_pseudoinverse(set.A, B) * set.b;
  return (set.A * candidate - set.b).norm();
}

bool check_consistency(const AffineSet& set, const SpdOperator& B, double tol) {
  if (!set.A.allFinite() || !set.b.allFinite()) return false;
  return consistency_residual(set, B) <= tol * (1.0 + set.b.norm());
}

Vector project_affine(const Vector& x, const AffineSet& set, const SpdOperator& B, double tol) {
  if (static_cast<std::size_t>(x.size()) != B.dim() || set.A.cols() != x.size()) {
    throw InvalidInput("projection: dimension mismatch");
  }
  const double residual = consistency_residual(set, B);
  if (residual > tol * (1.0 + set.b.norm())) {
    throw Inconsistent("projection onto an empty affine set (residual " +
                           std::to_string(residual) + ")",
                       residual);
  }
  return x - b_pseudoinverse(set.A, B) * (set.A * x - set.b);
}

Matrix null_space_basis(const Matrix& m, double rel_tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

std::size_t numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * s(0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

double condition_number(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

}  // namespace stochlin
