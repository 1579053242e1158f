#pragma once

// Dense linear-algebra substrate: pseudoinverses, B-geometry, symmetric
// eigendecompositions and affine projections.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace stochlin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws InvalidInput if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

// Relative asymmetry ||M - M^T||_max / max(1, ||M||_max).
double asymmetry(const Matrix& m);

// Moore-Penrose pseudoinverse via SVD. Singular values below
// rel_tol * sigma_max are treated as zero; the default rel_tol is
// machine epsilon times max(rows, cols).
Matrix pseudoinverse(const Matrix& m, std::optional<double> rel_tol = std::nullopt);

struct SymmetricEigen {
  Matrix vectors;  // columns orthonormal, ordered like `values`
  Vector values;   // descending
};

// Requires symmetry to 1e-10 relative; the input is symmetrized before solving.
SymmetricEigen sym_eigendecomposition(const Matrix& m);

// Symmetric positive definite operator B with its square root, inverse square
// root and inverse precomputed once. Immutable after construction.
class SpdOperator {
 public:
  explicit SpdOperator(const Matrix& base);

  static SpdOperator identity(std::size_t n);
  static SpdOperator diagonal(const Vector& d);

  std::size_t dim() const { return static_cast<std::size_t>(base_.rows()); }
  bool is_identity() const { return identity_; }

  const Matrix& base() const { return base_; }
  const Matrix& sqrt() const { return sqrt_; }
  const Matrix& inv_sqrt() const { return inv_sqrt_; }
  const Matrix& inverse() const { return inverse_; }

  Vector apply(const Vector& x) const;  // B x
  Vector solve(const Vector& x) const;  // B^{-1} x
  Matrix solve(const Matrix& x) const;  // B^{-1} X

  double inner(const Vector& x, const Vector& y) const;  // x^T B y
  double norm_sq(const Vector& x) const;
  double norm(const Vector& x) const;

 private:
  Matrix base_;
  Matrix sqrt_;
  Matrix inv_sqrt_;
  Matrix inverse_;
  bool identity_ = false;
};

// sqrt(x^T B x).
double b_norm(const Vector& x, const SpdOperator& B);

// x^T M x for a merely positive semidefinite M. This is a pseudonorm squared,
// not a norm, so it gets its own name.
double psd_quadratic_form(const Vector& x, const Matrix& M);

// B^{-1} M^T (M B^{-1} M^T)^dagger for M of shape q x n with n = B.dim().
Matrix b_pseudoinverse(const Matrix& m, const SpdOperator& B);

// Solution set {x : A x = b}.
struct AffineSet {
  Matrix A;
  Vector b;
};

// ||A (A^{dagger_B} b) - b|| <= tol * (1 + ||b||).
bool check_consistency(const AffineSet& set, const SpdOperator& B, double tol = 1e-8);

// Residual used by check_consistency, exposed for error reporting.
double consistency_residual(const AffineSet& set, const SpdOperator& B);

// B-orthogonal projection of x onto the affine set. Throws Inconsistent when
// the set is empty (per check_consistency with `tol`).
Vector project_affine(const Vector& x, const AffineSet& set, const SpdOperator& B,
                      double tol = 1e-8);

// Orthonormal basis of null(M) from the SVD, with rank decided at
// rel_tol * sigma_max. Returns an n x 0 matrix for full column rank.
Matrix null_space_basis(const Matrix& m, double rel_tol);

std::size_t numerical_rank(const Matrix& m, double rel_tol);

// 2-norm condition number (inf for singular input).
double condition_number(const Matrix& m);

}  // namespace stochlin
