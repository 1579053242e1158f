#pragma once

// Reference computations for the tests. Each one avoids the library routine it
// is compared against (complete orthogonal decomposition instead of SVD,
// explicit dense sketches instead of selections, KKT solves instead of
// B-pseudoinverses).

#include "stochlin/linalg.hpp"
#include "stochlin/rng.hpp"
#include "stochlin/sketching.hpp"

#include <random>

namespace oracle {

using stochlin::Matrix;
using stochlin::Vector;

inline Matrix pinv(const Matrix& m) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
  cod.setThreshold(1e-11);
  return cod.pseudoInverse();
}

inline Vector gaussian(Eigen::Index n, std::mt19937_64& g) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = d(g);
  return v;
}

inline Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& g) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = d(g);
  return m;
}

inline Matrix random_spd(Eigen::Index n, std::mt19937_64& g) {
  const Matrix G = gaussian(n, n, g);
  return G * G.transpose() / static_cast<double>(n) + Matrix::Identity(n, n);
}

// Z = A^T S (S^T A B^{-1} A^T S)^+ S^T A with S materialized.
inline Matrix Z(const Matrix& A, const Matrix& Binv, const Matrix& S) {
  const Matrix SA = S.transpose() * A;
  return SA.transpose() * pinv(SA * Binv * SA.transpose()) * SA;
}

// Sum over atoms of p_j Z_j.
inline Matrix expected_Z(const Matrix& A, const Matrix& Binv, const stochlin::FiniteSupport& atoms) {
  Matrix ez = Matrix::Zero(A.cols(), A.cols());
  for (const auto& a : atoms) ez += a.probability * Z(A, Binv, a.sample.materialize());
  return ez;
}

// B-projection onto {y : M y = c} from the KKT system
// [B M^T; M 0] [y; l] = [B x; c], with a least-squares solve for rank-deficient M.
inline Vector project(const Vector& x, const Matrix& M, const Vector& c, const Matrix& B) {
  const auto n = B.rows(), q = M.rows();
  Matrix K = Matrix::Zero(n + q, n + q);
  K.topLeftCorner(n, n) = B;
  K.topRightCorner(n, q) = M.transpose();
  K.bottomLeftCorner(q, n) = M;
  Vector rhs(n + q);
  rhs << B * x, c;
  return pinv(K).operator*(rhs).head(n);
}

// Eigenvalues of B^{-1/2} E B^{-1/2} through the similar matrix B^{-1} E.
inline Vector spectrum_via_similarity(const Matrix& E, const Matrix& B) {
  Eigen::EigenSolver<Matrix> es(B.inverse() * E);
  Vector ev = es.eigenvalues().real();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

}  // namespace oracle
