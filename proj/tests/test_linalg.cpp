#include "stochlin/error.hpp"
#include "stochlin/linalg.hpp"
#include "stochlin/system.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace stochlin;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Pseudoinverse, MatchesOrthogonalDecompositionOnRankDeficientMatrices) {
  std::mt19937_64 g(11);
  for (int t = 0; t < 50; ++t) {
    const Matrix m = oracle::gaussian(6, 3, g) * oracle::gaussian(3, 5, g);
    EXPECT_LT(max_abs(pseudoinverse(m) - oracle::pinv(m)), 1e-9);
  }
}

TEST(Pseudoinverse, PenroseConditions) {
  std::mt19937_64 g(12);
  const Matrix m = oracle::gaussian(5, 2, g) * oracle::gaussian(2, 4, g);
  const Matrix p = pseudoinverse(m);
  EXPECT_LT(max_abs(m * p * m - m), 1e-12);
  EXPECT_LT(max_abs(p * m * p - p), 1e-12);
  EXPECT_LT(max_abs((m * p).transpose() - m * p), 1e-12);
  EXPECT_LT(max_abs((p * m).transpose() - p * m), 1e-12);
}

TEST(Pseudoinverse, ZeroMatrix) {
  EXPECT_EQ(max_abs(pseudoinverse(Matrix::Zero(3, 2))), 0.0);
}

TEST(SymmetricEigen, DescendingAndReconstructs) {
  std::mt19937_64 g(13);
  const Matrix s = oracle::random_spd(6, g);
  const auto e = sym_eigendecomposition(s);
  for (Eigen::Index i = 1; i < e.values.size(); ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  EXPECT_LT(max_abs(e.vectors * e.values.asDiagonal() * e.vectors.transpose() - s), 1e-12);
}

TEST(SymmetricEigen, RejectsAsymmetricInput) {
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(sym_eigendecomposition(m), InvalidInput);
}

TEST(SpdOperator, RootsAndInverse) {
  std::mt19937_64 g(14);
  const Matrix b = oracle::random_spd(5, g);
  const SpdOperator B(b);
  EXPECT_LT(max_abs(B.sqrt() * B.sqrt() - b), 1e-12);
  EXPECT_LT(max_abs(B.inv_sqrt() * b * B.inv_sqrt() - Matrix::Identity(5, 5)), 1e-12);
  EXPECT_LT(max_abs(B.inverse() * b - Matrix::Identity(5, 5)), 1e-12);
  const Vector x = oracle::gaussian(5, g);
  EXPECT_NEAR(B.norm_sq(x), x.dot(b * x), 1e-12);
  EXPECT_NEAR(b_norm(x, B), std::sqrt(x.dot(b * x)), 1e-12);
  EXPECT_LT((B.solve(x) - b.ldlt().solve(x)).norm(), 1e-12);
}

TEST(SpdOperator, RejectsIndefiniteAndAsymmetric) {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  EXPECT_THROW(SpdOperator{m}, InvalidInput);
  m << 1, 0.5, 0, 1;
  EXPECT_THROW(SpdOperator{m}, InvalidInput);
}

TEST(SpdOperator, IdentityAndDiagonal) {
  EXPECT_TRUE(SpdOperator::identity(3).is_identity());
  const auto D = SpdOperator::diagonal(Vector::Constant(2, 4.0));
  EXPECT_DOUBLE_EQ(D.sqrt()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(D.inv_sqrt()(1, 1), 0.5);
}

TEST(PsdQuadraticForm, SemidefiniteInput) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3.0;
  Vector x(2);
  x << 2.0, 5.0;
  EXPECT_DOUBLE_EQ(psd_quadratic_form(x, m), 12.0);
}

TEST(BPseudoinverse, IdentityGeometryReducesToMoorePenroseForFullRowRank) {
  std::mt19937_64 g(15);
  const Matrix m = oracle::gaussian(2, 4, g);
  EXPECT_LT(max_abs(b_pseudoinverse(m, SpdOperator::identity(4)) - oracle::pinv(m)), 1e-10);
}

TEST(BPseudoinverse, GeneralisedInverseInBGeometry) {
  std::mt19937_64 g(16);
  const Matrix b = oracle::random_spd(4, g);
  const SpdOperator B(b);
  const Matrix m = oracle::gaussian(3, 2, g) * oracle::gaussian(2, 4, g);
  const Matrix p = b_pseudoinverse(m, B);
  EXPECT_LT(max_abs(m * p * m - m), 1e-10);
  // p m is a B-orthogonal projector: B (p m) is symmetric.
  EXPECT_LT(asymmetry(b * p * m), 1e-10);
}

TEST(ProjectAffine, MatchesKktSolve) {
  std::mt19937_64 g(17);
  for (int t = 0; t < 20; ++t) {
    const Matrix b = oracle::random_spd(5, g);
    const Matrix A = oracle::gaussian(3, 5, g);
    const Vector rhs = A * oracle::gaussian(5, g);
    const Vector x = oracle::gaussian(5, g);
    const Vector p = project_affine(x, {A, rhs}, SpdOperator(b));
    EXPECT_LT((p - oracle::project(x, A, rhs, b)).norm(), 1e-9);
    EXPECT_LT((A * p - rhs).norm(), 1e-10);
  }
}

TEST(ProjectAffine, InconsistentSetThrows) {
  Matrix A(2, 1);
  A << 1, 1;
  Vector b(2);
  b << 0, 1;
  EXPECT_FALSE(check_consistency({A, b}, SpdOperator::identity(1)));
  EXPECT_GT(consistency_residual({A, b}, SpdOperator::identity(1)), 0.1);
  EXPECT_THROW(project_affine(Vector::Zero(1), {A, b}, SpdOperator::identity(1)), Inconsistent);
}

TEST(NullSpace, BasisIsOrthonormalAndAnnihilated) {
  std::mt19937_64 g(18);
  const Matrix m = oracle::gaussian(4, 2, g) * oracle::gaussian(2, 6, g);
  const Matrix N = null_space_basis(m, 1e-10);
  ASSERT_EQ(N.cols(), 4);
  EXPECT_LT(max_abs(N.transpose() * N - Matrix::Identity(4, 4)), 1e-12);
  EXPECT_LT(max_abs(m * N), 1e-10);
  EXPECT_EQ(numerical_rank(m, 1e-10), 2u);
  EXPECT_EQ(null_space_basis(Matrix::Identity(3, 3), 1e-10).cols(), 0);
}

TEST(ConditionNumber, DiagonalAndSingular) {
  Vector d(3);
  d << 1.0, 10.0, 100.0;
  EXPECT_NEAR(condition_number(d.asDiagonal().toDenseMatrix()), 100.0, 1e-10);
  EXPECT_TRUE(std::isinf(condition_number(Matrix::Zero(2, 2))));
}

TEST(RequireFinite, RejectsNan) {
  Matrix m = Matrix::Ones(2, 2);
  m(1, 0) = std::nan("");
  EXPECT_THROW(require_finite(m, "m"), InvalidInput);
}

TEST(LinearSystem, ReferenceSystemAndProjection) {
  Matrix A = Vector((Vector(2) << 1, 2).finished()).asDiagonal();
  const LinearSystem sys(A, (Vector(2) << 1, 2).finished(), SpdOperator::identity(2));
  EXPECT_LT((sys.project(Vector::Zero(2)) - Vector::Ones(2)).norm(), 1e-14);
}

TEST(LinearSystem, InconsistentSystemNamesResidual) {
  Matrix A(2, 1);
  A << 1, 1;
  try {
    LinearSystem sys(A, (Vector(2) << 0, 1).finished(), SpdOperator::identity(1));
    FAIL() << "expected Inconsistent";
  } catch (const Inconsistent& e) {
    EXPECT_GT(e.residual(), 0.1);
    EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
  }
}

TEST(LinearSystem, DimensionChecks) {
  EXPECT_THROW(LinearSystem(Matrix::Ones(2, 2), Vector::Ones(3), SpdOperator::identity(2)), InvalidInput);
  EXPECT_THROW(LinearSystem(Matrix::Ones(2, 2), Vector::Ones(2), SpdOperator::identity(3)), InvalidInput);
}

TEST(LinearSystem, ProjectionIsIdempotentAndBOrthogonal) {
  std::mt19937_64 g(19);
  const Matrix b = oracle::random_spd(4, g);
  const Matrix A = oracle::gaussian(2, 4, g);
  const LinearSystem sys(A, A * oracle::gaussian(4, g), SpdOperator(b));
  const Vector x = oracle::gaussian(4, g);
  const Vector p = sys.project(x);
  EXPECT_LT((sys.project(p) - p).norm(), 1e-12);
  // x - p is B-orthogonal to null(A)
  const Matrix N = null_space_basis(A, 1e-12);
  EXPECT_LT((N.transpose() * b * (x - p)).norm(), 1e-10);
}
