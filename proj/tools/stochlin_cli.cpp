#include "stochlin/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"stochlin: stochastic reformulation solvers and theorem checks for consistent linear systems"};
  app.require_subcommand(1, 1);

  std::string config;
  std::uint64_t seed = 0;
  std::string output_dir;
  int threads = 0;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"run", "run the configured solvers and write traces, moments and the rate report"},
      {"diagnose", "spectrum, condition number and exactness only"},
      {"validate", "run the theorem check suite"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--output-dir", output_dir, "override the output directory");
    sub->add_option("--threads", threads, "worker threads (never changes results)")->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  stochlin::Overrides ov;
  for (auto* sub : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--output-dir")) ov.output_dir = output_dir;
    if (sub->count("--threads")) ov.threads = threads;
    const auto cmd = stochlin::parse_command(sub->get_name());
    return stochlin::run_command(*cmd, config, ov, std::cout, std::cerr);
  }
  return 2;
}
