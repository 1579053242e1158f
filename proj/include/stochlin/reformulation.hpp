#pragma once

// The stochastic reformulation of A x = b: per-sample operators H and Z,
// stochastic function values and gradients, expectations E[Z], the spectrum
// of W = B^{-1/2} E[Z] B^{-1/2} and the exactness verdict.

#include "stochlin/execution.hpp"
#include "stochlin/linalg.hpp"
#include "stochlin/sketching.hpp"
#include "stochlin/system.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace stochlin {

// Relative singular-value cut for (S^T A B^{-1} A^T S)^dagger. Duplicate sketch
// columns make the Gram matrix exactly singular and round-off leaves ~1e-16.
inline constexpr double kGramPinvTol = 1e-12;

// Quantities attached to one sketch S. H is m x m and is formed on demand;
// everything the iterative methods need goes through the q x n block S^T A.
class SketchedSystem {
 public:
  const SketchSample& sample() const { return sample_; }
  const Matrix& SA() const { return SA_; }            // S^T A
  const Vector& Sb() const { return Sb_; }            // S^T b
  const Matrix& gram_pinv() const { return G_pinv_; } // (S^T A B^{-1} A^T S)^dagger
  const Matrix& Z() const { return Z_; }              // A^T H A

  Matrix H() const;  // S (S^T A B^{-1} A^T S)^dagger S^T

  // B^{-1} Z, the Hessian of f_S in the B-geometry.
  Matrix hessian(const SpdOperator& B) const;

 private:
  friend SketchedSystem sketched_system(const LinearSystem&, const SketchSample&);
  SketchSample sample_;
  Matrix SA_;
  Vector Sb_;
  Matrix G_pinv_;
  Matrix Z_;
};

SketchedSystem sketched_system(const LinearSystem& sys, const SketchSample& S);

// f_S(x) = 1/2 (Ax - b)^T H (Ax - b).
double stochastic_value(const SketchedSystem& ss, const Vector& x);

// grad f_S(x) = B^{-1} A^T H (Ax - b).
Vector stochastic_gradient(const SketchedSystem& ss, const Vector& x, const SpdOperator& B);

// L_S = {x : S^T A x = S^T b}.
AffineSet sketched_solution_set(const SketchedSystem& ss);

struct ExpectationEstimate {
  Matrix mean;                  // symmetrized
  bool exact = false;
  std::size_t atoms = 0;        // exact: support size
  std::size_t samples = 0;      // Monte Carlo: sample count
  Matrix entry_standard_error;  // Monte Carlo only
  double standard_error = 0.0;  // Monte Carlo: spectral-norm proxy
};

struct ReformulationOptions {
  std::size_t support_cap = kDefaultSupportCap;
  std::size_t mc_samples = 10000;
  std::uint64_t seed = 0;
  double rank_threshold = 1e-10;  // relative to lambda_max
  Execution execution = Execution::Parallel;
};

// E[Z] by exact enumeration of `support` or, failing that, Monte Carlo.
ExpectationEstimate expected_Z(const LinearSystem& sys, const SketchDistribution& dist,
                               const ReformulationOptions& opts);

struct Spectrum {
  Matrix W;
  Matrix U;
  Vector lambdas;      // clamped to [0, 1], descending
  Vector raw_lambdas;  // as computed
  double lambda_max = 0.0;
  double lambda_min_plus = 0.0;
  double zeta = 0.0;
  double rank_threshold = 0.0;  // absolute
  std::size_t rank = 0;
  bool exact = false;
  std::size_t samples = 0;
  double standard_error = 0.0;
};

// Throws DegenerateSpectrum when every eigenvalue is negligible (A = 0).
Spectrum spectrum_of(const ExpectationEstimate& ez, const SpdOperator& B,
                     double rank_threshold_rel = 1e-10);

enum class Exactness { Exact, NotExact, Undecidable };
std::string to_string(Exactness e);

class Reformulation {
 public:
  Reformulation(LinearSystem sys, SketchDistribution dist, ReformulationOptions opts = {});

  const LinearSystem& system() const { return sys_; }
  const SketchDistribution& distribution() const { return dist_; }
  const ReformulationOptions& options() const { return opts_; }
  const ExpectationEstimate& expected_Z() const { return ez_; }
  const Spectrum& spectrum() const { return spectrum_; }
  const std::optional<FiniteSupport>& finite_support() const { return support_; }

  // Pi_L^B(0), the cached point of L used by f and grad f.
  const Vector& anchor() const { return anchor_; }

  double f(const Vector& x) const;
  Vector grad_f(const Vector& x) const;

 private:
  LinearSystem sys_;
  SketchDistribution dist_;
  ReformulationOptions opts_;
  std::optional<FiniteSupport> support_;
  ExpectationEstimate ez_;
  Spectrum spectrum_;
  Vector anchor_;
};

inline const Spectrum& spectrum(const Reformulation& r) { return r.spectrum(); }
inline double f_value(const Reformulation& r, const Vector& x) { return r.f(x); }
inline Vector grad_f(const Reformulation& r, const Vector& x) { return r.grad_f(x); }

// null(E[Z]) == null(A), decided by rank comparison plus basis inclusion.
// Undecidable unless E[Z] was computed exactly.
Exactness check_exactness(const Reformulation& r);

}  // namespace stochlin
