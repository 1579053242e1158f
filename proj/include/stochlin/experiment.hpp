#pragma once

// Config-driven experiments behind the `stochlin` CLI: config parsing,
// problem assembly and the run / diagnose / validate commands with their
// CSV and JSON artifacts.

#include "stochlin/analysis.hpp"
#include "stochlin/problem_generators.hpp"
#include "stochlin/reformulation.hpp"
#include "stochlin/validation.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stochlin {

enum class Command { Run, Diagnose, Validate };
std::string to_string(Command c);
std::optional<Command> parse_command(const std::string& name);

// A stepsize is a number or the name of a policy resolved against the spectrum
// ("unit", "inverse-lambda-max", "optimal", "parallel-optimal").
struct OmegaChoice {
  std::optional<double> value;
  std::string policy;
};

struct SolverSpec {
  Method method = Method::Basic;
  std::string label;
  std::vector<OmegaChoice> omegas{OmegaChoice{1.0, ""}};
  std::vector<std::size_t> taus{1};
  std::optional<double> mu;
  std::optional<double> gamma;
  bool theory_backed = true;
  std::optional<double> tolerance;
};

struct DistributionSpec {
  std::string kind = "kaczmarz";
  std::vector<double> probabilities;  // coordinate; empty means uniform
  std::size_t q = 1;
  bool with_replacement = false;
};

struct BSpec {
  std::string kind = "default";  // default | identity | diagonal | file | A
  std::vector<double> values;
  std::string path;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  std::optional<ProblemSpec> generator;
  std::string a_path;
  std::string b_path;
  BSpec B;
  DistributionSpec distribution;

  std::size_t support_cap = kDefaultSupportCap;
  std::size_t mc_samples = 10000;
  double rank_threshold = 1e-10;
  std::optional<std::vector<double>> x0;

  std::size_t replications = 2000;
  std::size_t iterations = 50;
  std::size_t burn_in = 5;
  std::size_t trace_replications = 10;
  std::vector<SolverSpec> solvers;

  std::vector<std::string> checks;  // validate: empty means every check
  ValidationOptions validation;     // seed, x0, enabled and execution are filled at run time
};

// Throws ConfigError naming the offending field as a JSON pointer. Relative
// file paths are resolved against base_dir.
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// Assembled problem. Throws InvalidInput for unreadable files and
// Inconsistent when Ax = b has no solution.
struct Experiment {
  std::unique_ptr<Reformulation> reformulation;
  Vector x0;
};
Experiment build_experiment(const ExperimentConfig& cfg, Execution exec = Execution::Parallel);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
};

// Runs one command and returns the process exit code: 0 when every enabled
// check passes, 1 when some check fails, 2 on input errors (reported on err).
int run_command(Command cmd, const std::string& config_path, const Overrides& overrides,
                std::ostream& out, std::ostream& err);

// Shortest round-trip decimal form used in every artifact.
std::string format_double(double v);

}  // namespace stochlin
