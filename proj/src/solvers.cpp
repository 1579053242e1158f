#include "stochlin/solvers.hpp"

#include "stochlin/error.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

namespace stochlin {

namespace {

void require_finite_omega(double omega) {
  if (!std::isfinite(omega)) throw InvalidInput("omega must be finite");
}

void require_x0(const Reformulation& r, const Vector& x0) {
  if (static_cast<std::size_t>(x0.size()) != r.system().cols()) {
    throw InvalidInput("x0 has length " + std::to_string(x0.size()) + ", expected " +
                       std::to_string(r.system().cols()));
  }
  require_finite(x0, "x0");
}

using Clock = std::chrono::steady_clock;

class Recorder {
 public:
  Recorder(const Reformulation& r, const SolverConfig& cfg, IterationTrace& trace)
      : r_(r), cfg_(cfg), trace_(trace) {}

  // Returns true when the tolerance has been reached.
  bool record(const Vector& x) {
    const double e = r_.system().B().norm_sq(x - trace_.x_star);
    if (cfg_.record.error_sq) trace_.error_sq.push_back(e);
    if (cfg_.record.f_values) trace_.f_values.push_back(r_.f(x));
    if (cfg_.record.iterates) trace_.iterates.push_back(x);
    return cfg_.tolerance && std::sqrt(e) <= *cfg_.tolerance;
  }

  void audit(std::size_t iter, std::size_t worker, const Vector& x, const StepResult& s) {
    if (!cfg_.record.audit) return;
    const auto& B = r_.system().B();
    StepAudit a;
    a.iter = iter;
    a.worker = worker;
    a.error_before = B.norm_sq(x - trace_.x_star);
    a.error_after = B.norm_sq(s.x - trace_.x_star);
    a.f_sample = s.f_sample;
    a.step_sq = B.norm_sq(s.x - x);
    a.omega = cfg_.omega;
    a.solution_sq = B.norm_sq(trace_.x_star);
    trace_.audit.push_back(a);
  }

 private:
  const Reformulation& r_;
  const SolverConfig& cfg_;
  IterationTrace& trace_;
};

IterationTrace start_trace(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                           std::size_t streams) {
  IterationTrace t;
  t.x_star = r.system().project(x0);
  t.seed = cfg.seed;
  t.replication = cfg.replication;
  t.streams = streams;
  return t;
}

}  // namespace

SampleSource stream_source(const SketchDistribution& dist, std::uint64_t seed,
                           std::uint32_t replication, std::size_t workers) {
  auto rngs = std::make_shared<std::vector<StreamRng>>();
  rngs->reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    rngs->emplace_back(seed, StreamId{replication, static_cast<std::uint32_t>(w)});
  }
  // Each worker touches only its own generator, so concurrent calls with
  // distinct workers are safe.
  return [rngs, dist](std::size_t, std::size_t worker) {
    return dist.sample((*rngs)[worker]);
  };
}

StepResult basic_step_with_value(const Vector& x, const SketchSample& S, double omega,
                                 const LinearSystem& sys) {
  if (static_cast<std::size_t>(x.size()) != sys.cols()) throw InvalidInput("step: x has wrong length");
  if (S.rows() != sys.rows()) throw InvalidInput("step: sketch has wrong row count");
  const Matrix SA = S.transpose_times(sys.A());
  const Vector Sr = SA * x - S.transpose_times(sys.b());
  const Matrix BinvSAt = sys.B().solve(Matrix(SA.transpose()));
  Matrix G = SA * BinvSAt;
  G = 0.5 * (G + G.transpose());
  const Vector y = pseudoinverse(G, kGramPinvTol) * Sr;
  StepResult out;
  out.x = x - omega * (BinvSAt * y);
  out.f_sample = std::max(0.0, 0.5 * Sr.dot(y));
  return out;
}

Vector basic_step(const Vector& x, const SketchSample& S, double omega, const LinearSystem& sys) {
  return basic_step_with_value(x, S, omega, sys).x;
}

Vector parallel_step(const Vector& x, const std::vector<SketchSample>& samples, double omega,
                     const LinearSystem& sys, Execution exec) {
  if (samples.empty()) throw InvalidInput("parallel step needs tau >= 1 samples");
  const auto tau = static_cast<long>(samples.size());
  std::vector<Vector> steps(samples.size());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < tau; ++i) steps[i] = basic_step(x, samples[i], omega, sys);
  } else {
    for (long i = 0; i < tau; ++i) steps[i] = basic_step(x, samples[i], omega, sys);
  }
  Vector sum = Vector::Zero(x.size());
  for (const auto& s : steps) sum += s;
  return sum / static_cast<double>(tau);
}

Vector prox_step(const Vector& x, const SketchSample& S, double omega, const LinearSystem& sys) {
  if (!(omega > 0.0 && omega <= 1.0)) throw InvalidInput("prox step needs omega in (0, 1]");
  const auto ss = sketched_system(sys, S);
  if (omega == 1.0) return project_affine(x, sketched_solution_set(ss), sys.B());
  const double mu = (1.0 - omega) / omega;
  const Matrix M = mu * sys.B().base() + ss.Z();
  const Vector rhs = ss.SA().transpose() * (ss.gram_pinv() * ss.Sb()) + mu * sys.B().apply(x);
  Eigen::LDLT<Matrix> ldlt(M);
  if (ldlt.info() != Eigen::Success) throw Singular("prox system is not positive definite");
  return ldlt.solve(rhs);
}

// ---------------------------------------------------------------------------
// Runs

IterationTrace run_basic(const Reformulation& r, const Vector& x0, const SolverConfig& cfg) {
  return run_basic(r, x0, cfg, stream_source(r.distribution(), cfg.seed, cfg.replication, 1));
}

IterationTrace run_basic(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                         const SampleSource& source) {
  require_finite_omega(cfg.omega);
  require_x0(r, x0);
  const auto t0 = Clock::now();
  IterationTrace trace = start_trace(r, x0, cfg, 1);
  Recorder rec(r, cfg, trace);
  Vector x = x0;
  bool done = rec.record(x);
  std::size_t k = 0;
  for (; k < cfg.max_iters && !done; ++k) {
    const auto step = basic_step_with_value(x, source(k, 0), cfg.omega, r.system());
    rec.audit(k, 0, x, step);
    x = step.x;
    done = rec.record(x);
  }
  trace.iterations = k;
  trace.converged = done;
  trace.x_final = x;
  trace.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return trace;
}

IterationTrace run_parallel(const Reformulation& r, const Vector& x0, const SolverConfig& cfg) {
  if (cfg.tau < 1) throw InvalidInput("tau must be >= 1");
  return run_parallel(r, x0, cfg,
                      stream_source(r.distribution(), cfg.seed, cfg.replication, cfg.tau));
}

IterationTrace run_parallel(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                            const SampleSource& source) {
  require_finite_omega(cfg.omega);
  require_x0(r, x0);
  if (cfg.tau < 1) throw InvalidInput("tau must be >= 1");
  const auto t0 = Clock::now();
  IterationTrace trace = start_trace(r, x0, cfg, cfg.tau);
  Recorder rec(r, cfg, trace);
  const auto tau = static_cast<long>(cfg.tau);
  std::vector<StepResult> steps(cfg.tau);
  Vector x = x0;
  bool done = rec.record(x);
  std::size_t k = 0;
  for (; k < cfg.max_iters && !done; ++k) {
    if (cfg.execution == Execution::Parallel && tau > 1) {
#pragma omp parallel for schedule(static)
      for (long i = 0; i < tau; ++i) {
        steps[i] = basic_step_with_value(x, source(k, i), cfg.omega, r.system());
      }
    } else {
      for (long i = 0; i < tau; ++i) {
        steps[i] = basic_step_with_value(x, source(k, i), cfg.omega, r.system());
      }
    }
    Vector sum = Vector::Zero(x.size());
    for (long i = 0; i < tau; ++i) {
      rec.audit(k, static_cast<std::size_t>(i), x, steps[i]);
      sum += steps[i].x;
    }
    x = tau == 1 ? steps[0].x : Vector(sum / static_cast<double>(tau));
    done = rec.record(x);
  }
  trace.iterations = k;
  trace.converged = done;
  trace.x_final = x;
  trace.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return trace;
}

AccelerationParams acceleration_params(const Spectrum& sp, const SolverConfig& cfg) {
  AccelerationParams p{};
  const double cap = cfg.omega * sp.lambda_min_plus;
  p.mu = cfg.mu ? *cfg.mu : (cfg.gamma ? std::numeric_limits<double>::quiet_NaN() : 0.99 * cap);
  if (cfg.theory_backed) {
    if (!(cfg.omega > 0.0 && cfg.omega <= (1.0 + 1e-12) / sp.lambda_max)) {
      throw InvalidInput("accelerated method needs 0 < omega <= 1/lambda_max = " +
                         std::to_string(1.0 / sp.lambda_max));
    }
    if (!(p.mu > 0.0 && p.mu < cap)) {
      throw InvalidInput("accelerated method needs mu in (0, omega * lambda_min+) = (0, " +
                         std::to_string(cap) + ")");
    }
  }
  const double implied = std::isnan(p.mu) ? std::numeric_limits<double>::quiet_NaN()
                                          : 2.0 / (1.0 + std::sqrt(p.mu));
  p.gamma = cfg.gamma ? *cfg.gamma : implied;
  if (cfg.theory_backed && std::abs(p.gamma - implied) > 1e-12 * implied) {
    throw InvalidInput("theory-backed accelerated method needs gamma = 2/(1 + sqrt(mu))");
  }
  if (!std::isfinite(p.gamma)) throw InvalidInput("acceleration gamma must be finite");
  return p;
}

IterationTrace accelerated_run(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                               const std::optional<Vector>& x1) {
  return accelerated_run(r, x0, cfg, x1,
                         stream_source(r.distribution(), cfg.seed, cfg.replication, 1));
}

IterationTrace accelerated_run(const Reformulation& r, const Vector& x0, const SolverConfig& cfg,
                               const std::optional<Vector>& x1_opt, const SampleSource& source) {
  require_finite_omega(cfg.omega);
  require_x0(r, x0);
  const Vector x1 = x1_opt ? *x1_opt : x0;
  require_x0(r, x1);
  const auto& sys = r.system();
  {
    // x0 - x1 must equal its B-orthogonal projection onto range(B^{-1} A^T).
    const Vector d = x0 - x1;
    const Vector Pd = b_pseudoinverse(sys.A(), sys.B()) * (sys.A() * d);
    const double resid = sys.B().norm(d - Pd);
    if (resid > 1e-9 * std::max(1.0, sys.B().norm(d))) {
      throw InvalidInput("x0 - x1 is not in range(B^{-1} A^T): residual " + std::to_string(resid));
    }
  }
  const auto params = acceleration_params(r.spectrum(), cfg);
  const double g = params.gamma;

  const auto t0 = Clock::now();
  IterationTrace trace = start_trace(r, x0, cfg, 1);
  Recorder rec(r, cfg, trace);
  bool done = rec.record(x0);
  std::size_t k = 0;
  Vector x = x0;
  if (cfg.max_iters > 0 && !done) {
    auto z0 = basic_step_with_value(x0, source(0, 0), cfg.omega, sys);
    rec.audit(0, 0, x0, z0);
    Vector z_prev = std::move(z0.x);
    x = x1;
    done = rec.record(x);
    k = 1;
    for (; k < cfg.max_iters && !done; ++k) {
      auto z = basic_step_with_value(x, source(k, 0), cfg.omega, sys);
      rec.audit(k, 0, x, z);
      x = g * z.x + (1.0 - g) * z_prev;
      z_prev = std::move(z.x);
      done = rec.record(x);
    }
  }
  trace.iterations = k;
  trace.converged = done;
  trace.x_final = x;
  trace.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return trace;
}

// ---------------------------------------------------------------------------
// Stepsizes

std::string to_string(StepsizeKind k) {
  switch (k) {
    case StepsizeKind::Unit: return "unit";
    case StepsizeKind::InverseLambdaMax: return "inverse-lambda-max";
    case StepsizeKind::Optimal: return "optimal";
  }
  return "unit";
}

std::optional<StepsizeKind> parse_stepsize_kind(const std::string& name) {
  if (name == "unit") return StepsizeKind::Unit;
  if (name == "inverse-lambda-max") return StepsizeKind::InverseLambdaMax;
  if (name == "optimal") return StepsizeKind::Optimal;
  return std::nullopt;
}

double stepsize_policy(const Spectrum& sp, StepsizeKind kind) {
  if (kind == StepsizeKind::Unit) return 1.0;
  if (!(sp.lambda_max > 0.0) || !(sp.lambda_min_plus > 0.0)) {
    throw DegenerateSpectrum("stepsize policy needs a non-degenerate spectrum");
  }
  if (kind == StepsizeKind::InverseLambdaMax) return 1.0 / sp.lambda_max;
  return 2.0 / (sp.lambda_min_plus + sp.lambda_max);
}

double policy_rate(const Spectrum& sp, StepsizeKind kind) {
  switch (kind) {
    case StepsizeKind::Unit: return std::pow(1.0 - sp.lambda_min_plus, 2);
    case StepsizeKind::InverseLambdaMax: return std::pow(1.0 - 1.0 / sp.zeta, 2);
    case StepsizeKind::Optimal: return std::pow(1.0 - 2.0 / (sp.zeta + 1.0), 2);
  }
  return 1.0;
}

}  // namespace stochlin
