#include "stochlin/reformulation.hpp"

#include "stochlin/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stochlin {

namespace {

long block_count(long items) { return (items + kReductionBlock - 1) / kReductionBlock; }

struct ZMoments {
  Matrix sum;
  Matrix sum_sq;    // entry-wise squares
  Matrix sum_prod;  // Z * Z
};

ZMoments zero_moments(Eigen::Index n, bool second) {
  ZMoments m;
  m.sum = Matrix::Zero(n, n);
  if (second) {
    m.sum_sq = Matrix::Zero(n, n);
    m.sum_prod = Matrix::Zero(n, n);
  }
  return m;
}

// Block-partial sums reduced in block order; `Z(i)` returns (weight, Z_i).
template <class ZOf>
ZMoments reduce_blocks(long items, Eigen::Index n, bool second, Execution exec, ZOf&& z_of) {
  const long blocks = block_count(items);
  std::vector<ZMoments> partial(static_cast<std::size_t>(blocks));
  auto run_block = [&](long blk) {
    ZMoments acc = zero_moments(n, second);
    const long hi = std::min(items, (blk + 1) * kReductionBlock);
    for (long i = blk * kReductionBlock; i < hi; ++i) {
      const auto [w, Z] = z_of(i);
      acc.sum.noalias() += w * Z;
      if (second) {
        acc.sum_sq.array() += Z.array().square();
        acc.sum_prod.noalias() += Z * Z;
      }
    }
    partial[static_cast<std::size_t>(blk)] = std::move(acc);
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long blk = 0; blk < blocks; ++blk) run_block(blk);
  } else {
    for (long blk = 0; blk < blocks; ++blk) run_block(blk);
  }
  ZMoments total = zero_moments(n, second);
  for (auto& p : partial) {
    total.sum += p.sum;
    if (second) {
      total.sum_sq += p.sum_sq;
      total.sum_prod += p.sum_prod;
    }
  }
  return total;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

// ---------------------------------------------------------------------------
// SketchedSystem

SketchedSystem sketched_system(const LinearSystem& sys, const SketchSample& S) {
  if (S.rows() != sys.rows()) {
    throw InvalidInput("sketch has " + std::to_string(S.rows()) + " rows, system has " +
                       std::to_string(sys.rows()));
  }
  SketchedSystem ss;
  ss.sample_ = S;
  ss.SA_ = S.transpose_times(sys.A());
  ss.Sb_ = S.transpose_times(sys.b());
  const Matrix BinvSAt = sys.B().solve(Matrix(ss.SA_.transpose()));
  const Matrix G = symmetrize(ss.SA_ * BinvSAt);
  ss.G_pinv_ = symmetrize(pseudoinverse(G, kGramPinvTol));
  ss.Z_ = symmetrize(ss.SA_.transpose() * ss.G_pinv_ * ss.SA_);
  return ss;
}

Matrix SketchedSystem::H() const {
  const Matrix S = sample_.materialize();
  return S * G_pinv_ * S.transpose();
}

Matrix SketchedSystem::hessian(const SpdOperator& B) const { return B.solve(Z_); }

double stochastic_value(const SketchedSystem& ss, const Vector& x) {
  if (x.size() != ss.SA().cols()) throw InvalidInput("f_S: dimension mismatch");
  const Vector r = ss.SA() * x - ss.Sb();
  return std::max(0.0, 0.5 * r.dot(ss.gram_pinv() * r));
}

Vector stochastic_gradient(const SketchedSystem& ss, const Vector& x, const SpdOperator& B) {
  if (x.size() != ss.SA().cols()) throw InvalidInput("grad f_S: dimension mismatch");
  const Vector r = ss.SA() * x - ss.Sb();
  return B.solve(Vector(ss.SA().transpose() * (ss.gram_pinv() * r)));
}

AffineSet sketched_solution_set(const SketchedSystem& ss) { return {ss.SA(), ss.Sb()}; }

// ---------------------------------------------------------------------------
// E[Z]

namespace {

ExpectationEstimate exact_expectation(const LinearSystem& sys, const FiniteSupport& atoms,
                                      Execution exec) {
  const auto n = static_cast<Eigen::Index>(sys.cols());
  const auto total = reduce_blocks(static_cast<long>(atoms.size()), n, false, exec, [&](long i) {
    const auto& atom = atoms[static_cast<std::size_t>(i)];
    return std::pair<double, Matrix>(atom.probability, sketched_system(sys, atom.sample).Z());
  });
  ExpectationEstimate est;
  est.mean = symmetrize(total.sum);
  est.exact = true;
  est.atoms = atoms.size();
  return est;
}

ExpectationEstimate mc_expectation(const LinearSystem& sys, const SketchDistribution& dist,
                                   const ReformulationOptions& opts) {
  if (opts.mc_samples < 2) throw InvalidInput("Monte Carlo E[Z] needs at least 2 samples");
  const auto n = static_cast<Eigen::Index>(sys.cols());
  const auto N = static_cast<long>(opts.mc_samples);
  const auto total = reduce_blocks(N, n, true, opts.execution, [&](long i) {
    StreamRng rng(opts.seed, {kExpectationStream, static_cast<std::uint32_t>(i)});
    return std::pair<double, Matrix>(1.0, sketched_system(sys, dist.sample(rng)).Z());
  });
  const double dN = static_cast<double>(N);
  ExpectationEstimate est;
  est.mean = symmetrize(total.sum / dN);
  est.exact = false;
  est.samples = opts.mc_samples;
  const Matrix var =
      ((total.sum_sq / dN).array() - est.mean.array().square()).max(0.0) * (dN / (dN - 1.0));
  est.entry_standard_error = (var / dN).array().sqrt();
  // E[(Z - EZ)^2] is PSD; its top eigenvalue over N bounds the spectral error scale.
  const Matrix cov = symmetrize(total.sum_prod / dN - est.mean * est.mean) * (dN / (dN - 1.0));
  const double top = cov.size() ? sym_eigendecomposition(cov).values(0) : 0.0;
  est.standard_error = std::sqrt(std::max(0.0, top) / dN);
  return est;
}

}  // namespace

ExpectationEstimate expected_Z(const LinearSystem& sys, const SketchDistribution& dist,
                               const ReformulationOptions& opts) {
  if (dist.rows() != sys.rows()) throw InvalidInput("distribution rows do not match A");
  if (auto atoms = dist.support(opts.support_cap)) {
    return exact_expectation(sys, *atoms, opts.execution);
  }
  return mc_expectation(sys, dist, opts);
}

// ---------------------------------------------------------------------------
// Spectrum

Spectrum spectrum_of(const ExpectationEstimate& ez, const SpdOperator& B,
                     double rank_threshold_rel) {
  Spectrum sp;
  sp.W = symmetrize(B.inv_sqrt() * ez.mean * B.inv_sqrt());
  const auto eig = sym_eigendecomposition(sp.W);
  sp.U = eig.vectors;
  sp.raw_lambdas = eig.values;
  sp.lambdas = eig.values.cwiseMax(0.0).cwiseMin(1.0);
  sp.lambda_max = sp.raw_lambdas(0);
  if (!(sp.lambda_max > 1e-14)) {
    throw DegenerateSpectrum("E[Z] has no eigenvalue above 1e-14; A is numerically zero");
  }
  sp.rank_threshold = rank_threshold_rel * sp.lambda_max;
  sp.lambda_min_plus = sp.lambda_max;
  sp.rank = 0;
  for (Eigen::Index i = 0; i < sp.raw_lambdas.size(); ++i) {
    if (sp.raw_lambdas(i) > sp.rank_threshold) {
      sp.lambda_min_plus = sp.raw_lambdas(i);
      ++sp.rank;
    }
  }
  sp.zeta = sp.lambda_max / sp.lambda_min_plus;
  sp.exact = ez.exact;
  sp.samples = ez.samples;
  sp.standard_error = ez.standard_error;
  return sp;
}

std::string to_string(Exactness e) {
  switch (e) {
    case Exactness::Exact: return "exact";
    case Exactness::NotExact: return "not-exact";
    case Exactness::Undecidable: return "undecidable";
  }
  return "undecidable";
}

// ---------------------------------------------------------------------------
// Reformulation

Reformulation::Reformulation(LinearSystem sys, SketchDistribution dist, ReformulationOptions opts)
    : sys_(std::move(sys)), dist_(std::move(dist)), opts_(opts) {
  if (dist_.rows() != sys_.rows()) throw InvalidInput("distribution rows do not match A");
  support_ = dist_.support(opts_.support_cap);
  if (support_) {
    ez_ = exact_expectation(sys_, *support_, opts_.execution);
  } else {
    ez_ = mc_expectation(sys_, dist_, opts_);
  }
  spectrum_ = spectrum_of(ez_, sys_.B(), opts_.rank_threshold);
  anchor_ = sys_.project(Vector::Zero(static_cast<Eigen::Index>(sys_.cols())));
}

double Reformulation::f(const Vector& x) const {
  if (x.size() != anchor_.size()) throw InvalidInput("f: dimension mismatch");
  const Vector d = x - anchor_;
  return std::max(0.0, 0.5 * d.dot(ez_.mean * d));
}

Vector Reformulation::grad_f(const Vector& x) const {
  if (x.size() != anchor_.size()) throw InvalidInput("grad f: dimension mismatch");
  return sys_.B().solve(Vector(ez_.mean * (x - anchor_)));
}

Exactness check_exactness(const Reformulation& r) {
  if (!r.expected_Z().exact) return Exactness::Undecidable;
  const auto& sp = r.spectrum();
  const auto& A = r.system().A();
  const auto& B = r.system().B();
  const double rel = r.options().rank_threshold;
  // lambda ~ sigma^2, so the matching singular-value threshold is sqrt(rel).
  const double sigma_rel = std::sqrt(rel);
  const std::size_t rank_A = numerical_rank(A, sigma_rel);
  if (rank_A != sp.rank) return Exactness::NotExact;

  // null(E[Z]) = B^{-1/2} null(W); each basis vector must be annihilated by A.
  const auto n = sp.U.cols();
  const auto r_ez = static_cast<Eigen::Index>(sp.rank);
  const double a_scale = std::max(A.norm(), 1e-300);
  if (r_ez < n) {
    Matrix N_ez = B.inv_sqrt() * sp.U.rightCols(n - r_ez);
    for (Eigen::Index j = 0; j < N_ez.cols(); ++j) N_ez.col(j).normalize();
    if ((A * N_ez).norm() > sigma_rel * a_scale * std::sqrt(static_cast<double>(n))) {
      return Exactness::NotExact;
    }
  }
  // And each null(A) basis vector by E[Z] (automatic in exact arithmetic).
  const Matrix N_A = null_space_basis(A, sigma_rel);
  if (N_A.cols() > 0) {
    const double z_scale = std::max(r.expected_Z().mean.norm(), 1e-300);
    if ((r.expected_Z().mean * N_A).norm() > rel * z_scale * std::sqrt(static_cast<double>(n))) {
      return Exactness::NotExact;
    }
  }
  return Exactness::Exact;
}

}  // namespace stochlin
