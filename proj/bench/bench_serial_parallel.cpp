// Serial reference versus OpenMP kernels.

#include "stochlin/analysis.hpp"
#include "stochlin/problem_generators.hpp"

#include <benchmark/benchmark.h>

using namespace stochlin;

namespace {

Execution exec_of(const benchmark::State& st) { return st.range(0) ? Execution::Parallel : Execution::Serial; }

LinearSystem gaussian_system(std::size_t m, std::size_t n) {
  ProblemSpec s;
  s.kind = ProblemKind::GaussianConsistent;
  s.rows = m;
  s.cols = n;
  s.seed = 3;
  const auto p = generate_problem(s);
  return LinearSystem(p.A, p.b, SpdOperator::identity(n));
}

void BM_MonteCarloMoments(benchmark::State& st) {
  const auto sys = gaussian_system(200, 40);
  const Reformulation r(sys, SketchDistribution::block(200, 10));
  MonteCarloConfig c;
  c.replications = 256;
  c.iterations = 40;
  c.solver.seed = 1;
  for (auto _ : st) benchmark::DoNotOptimize(monte_carlo_moments(r, Vector::Zero(40), c, exec_of(st)));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_MonteCarloMoments)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExpectedZ(benchmark::State& st) {
  const auto sys = gaussian_system(400, 60);
  const auto dist = kaczmarz_distribution(sys.A());
  ReformulationOptions o;
  o.execution = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(expected_Z(sys, dist, o));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_ExpectedZ)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExpectedZMonteCarlo(benchmark::State& st) {
  const auto sys = gaussian_system(100, 30);
  const auto dist = SketchDistribution::gaussian(100, 5);
  ReformulationOptions o;
  o.execution = exec_of(st);
  o.mc_samples = 4000;
  for (auto _ : st) benchmark::DoNotOptimize(expected_Z(sys, dist, o));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_ExpectedZMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ParallelMethodInnerLoop(benchmark::State& st) {
  const auto sys = gaussian_system(300, 50);
  const Reformulation r(sys, SketchDistribution::block(300, 20));
  SolverConfig c;
  c.tau = 64;
  c.max_iters = 20;
  c.seed = 2;
  c.execution = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(run_parallel(r, Vector::Zero(50), c));
  st.SetLabel(st.range(0) ? "parallel" : "serial");
}
BENCHMARK(BM_ParallelMethodInnerLoop)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
