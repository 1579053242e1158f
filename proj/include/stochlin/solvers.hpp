#pragma once

// Basic (sketch-and-project with relaxation), parallel/minibatch and
// accelerated methods, the stochastic proximal point step and stepsize rules.

#include "stochlin/execution.hpp"
#include "stochlin/reformulation.hpp"
#include "stochlin/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stochlin {

struct RecordFlags {
  bool error_sq = true;   // ||x_k - x*||_B^2
  bool f_values = false;  // f(x_k), needs E[Z]
  bool iterates = false;  // raw x_k
  bool audit = false;     // per-step identity audit
};

struct SolverConfig {
  double omega = 1.0;
  std::size_t tau = 1;
  std::optional<double> gamma;  // accelerated; default 2 / (1 + sqrt(mu))
  std::optional<double> mu;     // accelerated; default 0.99 * omega * lambda_min+
  bool theory_backed = true;    // accelerated: reject mu outside (0, omega * lambda_min+)
  std::size_t max_iters = 50;
  std::uint64_t seed = 0;
  std::uint32_t replication = 0;
  RecordFlags record;
  std::optional<double> tolerance;  // stop once ||x_k - x*||_B <= tolerance
  Execution execution = Execution::Serial;  // inner samples of the parallel method
};

// One evaluation of phi_omega(x, S). Both sides of each identity are recorded
// so audits can check exactness without re-running the step.
struct StepAudit {
  std::size_t iter = 0;
  std::size_t worker = 0;
  double error_before = 0.0;  // ||x - x*||_B^2
  double error_after = 0.0;   // ||phi - x*||_B^2
  double f_sample = 0.0;      // f_S(x)
  double step_sq = 0.0;       // ||phi - x||_B^2
  double omega = 0.0;
  double solution_sq = 0.0;   // ||x*||_B^2, sets the roundoff floor
};

struct IterationTrace {
  std::vector<double> error_sq;  // k = 0..iterations
  std::vector<double> f_values;
  std::vector<Vector> iterates;
  std::vector<StepAudit> audit;
  Vector x_star;
  Vector x_final;
  std::size_t iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t replication = 0;
  std::size_t streams = 1;  // workers 0..streams-1 of this replication
};

// Draws the sketch for (iteration, worker). The default source reads worker
// w's Philox stream of the configured replication sequentially.
using SampleSource = std::function<SketchSample(std::size_t iter, std::size_t worker)>;

SampleSource stream_source(const SketchDistribution& dist, std::uint64_t seed,
                           std::uint32_t replication, std::size_t workers);

struct StepResult {
  Vector x;
  double f_sample = 0.0;  // f_S at the input point
};

// phi_omega(x, S) = x - omega B^{-1} A^T S (S^T A B^{-1} A^T S)^dagger S^T (A x - b).
StepResult basic_step_with_value(const Vector& x, const SketchSample& S, double omega,
                                 const LinearSystem& sys);
Vector basic_step(const Vector& x, const SketchSample& S, double omega, const LinearSystem& sys);

// Average of basic steps from the same x.
Vector parallel_step(const Vector& x, const std::vector<SketchSample>& samples, double omega,
                     const LinearSystem& sys, Execution exec = Execution::Serial);

// argmin_z f_S(z) + (1 - omega) / (2 omega) ||z - x||_B^2 for omega in (0, 1].
Vector prox_step(const Vector& x, const SketchSample& S, double omega, const LinearSystem& sys);

IterationTrace run_basic(const Reformulation& r, const Vector& x0, const SolverConfig& cfg);
IterationTrace run_basic(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                         const SampleSource& source);

IterationTrace run_parallel(const Reformulation& r, const Vector& x0, const SolverConfig& cfg);
IterationTrace run_parallel(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                            const SampleSource& source);

struct AccelerationParams {
  double gamma;
  double mu;  // NaN when gamma was given directly without mu
};

// Resolves gamma and mu from the config and spectrum; throws InvalidInput on
// a theory-backed config with mu outside (0, omega * lambda_min+).
AccelerationParams acceleration_params(const Spectrum& sp, const SolverConfig& cfg);

// x1 defaults to x0. Throws InvalidInput unless x0 - x1 lies in range(B^{-1} A^T).
IterationTrace accelerated_run(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                               const std::optional<Vector>& x1 = std::nullopt);
IterationTrace accelerated_run(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                               const std::optional<Vector>& x1, const SampleSource& source);

enum class StepsizeKind { Unit, InverseLambdaMax, Optimal };
std::string to_string(StepsizeKind k);
std::optional<StepsizeKind> parse_stepsize_kind(const std::string& name);

double stepsize_policy(const Spectrum& sp, StepsizeKind kind);

// rho(omega) = max_i (1 - omega lambda_i)^2 over the nonzero spectrum, the
// per-iteration factor of ||E[x_k - x*]||_B^2, evaluated at the policy's omega.
double policy_rate(const Spectrum& sp, StepsizeKind kind);

}  // namespace stochlin
