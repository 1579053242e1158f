#pragma once

// Monte Carlo moments of solver trajectories, exact expected iterates for
// finite-support distributions, closed-form rate predictions, rate fitting and
// the two-term recurrence solver.

#include "stochlin/execution.hpp"
#include "stochlin/reformulation.hpp"
#include "stochlin/solvers.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace stochlin {

enum class Method { Basic, Parallel, Accelerated };
std::string to_string(Method m);
std::optional<Method> parse_method(const std::string& name);

struct MonteCarloConfig {
  Method method = Method::Basic;
  SolverConfig solver;  // seed is the master seed; replication is overwritten per run
  std::size_t replications = 2000;
  std::size_t iterations = 50;
  std::optional<Vector> x1;  // accelerated only
  bool audit = false;        // keep every replication's step audit
};

// Per-iteration estimates, index k = 0..K. Standard errors are sample
// standard deviation over replications divided by sqrt(R).
struct MomentEstimates {
  std::size_t replications = 0;
  std::size_t iterations = 0;
  Vector x_star;

  std::vector<Vector> mean_error;             // E[x_k - x*]
  std::vector<Vector> mean_error_se;
  std::vector<Vector> mean_transformed;       // U^T B^{1/2} E[x_k - x*]
  std::vector<Vector> mean_transformed_se;
  std::vector<double> mean_error_norm_sq;     // ||E[x_k - x*]||_B^2 (plug-in)
  std::vector<double> mean_error_norm_sq_se;  // delta method
  std::vector<double> error_sq;               // E ||x_k - x*||_B^2
  std::vector<double> error_sq_se;
  std::vector<double> f_value;                // E f(x_k)
  std::vector<double> f_value_se;
  // Cesaro average xhat_k = (1/k) sum_{t<k} x_t for k >= 1; entry 0 repeats k = 1.
  std::vector<double> cesaro_error_sq;
  std::vector<double> cesaro_error_sq_se;
  std::vector<double> cesaro_f_value;
  std::vector<double> cesaro_f_value_se;

  std::vector<StepAudit> audit;  // when requested, replication-major order
};

// Replications are split into fixed blocks; each block is reduced serially and
// blocks are combined in index order, so Serial and Parallel agree bitwise.
MomentEstimates monte_carlo_moments(const Reformulation& r, const Vector& x0,
                                    const MonteCarloConfig& cfg,
                                    Execution exec = Execution::Parallel);

// E[x_k - x*] computed exactly by pushing the mean through the atom-averaged
// update sum_j p_j phi_omega(., S_j). Needs a finite support. Basic and
// accelerated methods only (the parallel mean equals the basic one).
struct ExpectedIterates {
  std::vector<Vector> mean_error;
  std::vector<Vector> mean_transformed;
  std::vector<double> mean_error_norm_sq;
};

ExpectedIterates expected_iterates(const Reformulation& r, const Vector& x0, Method method,
                                   const SolverConfig& cfg, std::size_t iterations,
                                   const std::optional<Vector>& x1 = std::nullopt);

// Closed-form rates. Flags mark parameter regimes the theorems exclude; the
// corresponding values are still evaluated.
struct RatePrediction {
  double omega = 0.0;
  std::size_t tau = 1;
  double omega_star = 0.0;
  double rho_basic = 0.0;            // mean-error factor rho(omega)
  double l2_upper = 0.0;             // 1 - omega(2 - omega) lambda_min+
  double l2_lower = 0.0;             // 1 - omega(2 - omega) lambda_max
  double xi = 0.0;                   // 1/tau + (1 - 1/tau) lambda_max
  double rho_parallel = 0.0;         // 1 - omega(2 - omega xi) lambda_min+
  double rho_parallel_optimal = 0.0; // 1 - lambda_min+ / xi at omega = 1/xi
  double accelerated = 0.0;          // (1 - sqrt(mu))^2
  double f_first = 0.0;              // 1 - 2 lambda_min+ omega + lambda_max omega^2
  double f_second = 0.0;             // same as l2_upper, with prefactor lambda_max/2

  bool mean_converges = false;       // 0 < omega < 2 / lambda_max
  bool l2_valid = false;             // 0 < omega < 2
  bool f_first_valid = false;        // 0 <= omega <= 2 / zeta
  bool accelerated_valid = false;    // 0 < mu < omega lambda_min+, 0 < omega <= 1/lambda_max
};

RatePrediction theoretical_rates(const Spectrum& sp, double omega, std::size_t tau = 1,
                                 std::optional<double> mu = std::nullopt);

// rho(omega) per the piecewise formula.
double rho_basic(const Spectrum& sp, double omega);

struct RateFit {
  double rate = 1.0;
  double log_residual = 0.0;  // RMS of the log-linear fit
  std::size_t points = 0;
  bool floored = false;       // series reached the floor; fitted up to there
};

inline constexpr double kMachineFloor = 1e-300;
inline constexpr double kRoundoffRelative = 1e-24;  // of series[0]

// exp(slope) of a least-squares line through log(series[k]) for k >= burn_in.
// Throws InvalidInput when fewer than burn_in + 5 points are given.
RateFit fit_rate(const std::vector<double>& series, std::size_t burn_in);

// xi_{k+2} = E xi_{k+1} + F xi_k.
struct RecurrenceSolution {
  double E = 0.0;
  double F = 0.0;
  bool oscillatory = false;  // E^2 + 4F < 0
  std::complex<double> root1, root2;
  double modulus = 0.0;  // M
  double angle = 0.0;    // theta
  double C0 = 0.0;
  double C1 = 0.0;
  double xi0 = 0.0;
  double xi1 = 0.0;

  // Closed form when oscillatory, otherwise direct iteration.
  double operator()(std::size_t k) const;
  // 2 M^k (|C0| + |C1|); meaningful when oscillatory.
  double envelope(std::size_t k) const;
};

RecurrenceSolution solve_recurrence(double E, double F, double xi0, double xi1);
double solve_recurrence(double E, double F, double xi0, double xi1, std::size_t k);
double iterate_recurrence(double E, double F, double xi0, double xi1, std::size_t k);

}  // namespace stochlin
