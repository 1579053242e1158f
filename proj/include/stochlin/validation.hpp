#pragma once

// Theorem checks run by `validate`: each check evaluates one lemma or theorem
// on the configured problem and reports pass, fail or skip with its margins.

#include "stochlin/analysis.hpp"
#include "stochlin/reformulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stochlin {

enum class CheckStatus { Pass, Fail, Skip };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string id;
  CheckStatus status = CheckStatus::Skip;
  std::string detail;
  // Named scalar evidence (worst residuals, fitted rates, bounds) in a fixed order.
  std::vector<std::pair<std::string, double>> values;
};

struct ValidationOptions {
  std::uint64_t seed = 0;
  std::size_t replications = 500;
  std::size_t iterations = 30;
  std::size_t burn_in = 5;
  std::size_t random_points = 50;
  std::size_t oracle_instances = 200;
  double omega = 1.0;  // stepsize for the single-omega basic-method checks
  std::optional<Vector> x0;
  std::vector<std::string> enabled;  // empty: every check
  Execution execution = Execution::Parallel;
};

// All check identifiers in report order.
const std::vector<std::string>& theorem_check_ids();

std::vector<CheckResult> run_theorem_suite(const Reformulation& r, const ValidationOptions& opts);

// Worst relative residual among the gradient identities and f_S = 1/2 ||grad f_S||_B^2
// at (S, x), plus f_S(x - grad f_S(x)) scaled by max(1, f_S(x)).
struct IdentityResiduals {
  double gradient = 0.0;
  double value = 0.0;
  double zero = 0.0;
};
IdentityResiduals stochastic_identity_residuals(const LinearSystem& sys, const SketchSample& S,
                                                const Vector& x);

// Largest relative violation of the two per-step identities in an audit log.
struct PathwiseResiduals {
  double distance = 0.0;  // ||x' - x*||^2 = ||x - x*||^2 - 2 w (2 - w) f_S(x)
  double step = 0.0;      // ||x' - x||^2 = 2 w^2 f_S(x)
  std::size_t steps = 0;
};
PathwiseResiduals pathwise_residuals(const std::vector<StepAudit>& audit);

}  // namespace stochlin
