#include "stochlin/analysis.hpp"

#include "stochlin/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace stochlin {

std::string to_string(Method m) {
  switch (m) {
    case Method::Basic: return "basic";
    case Method::Parallel: return "parallel";
    case Method::Accelerated: return "accelerated";
  }
  return "basic";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "basic") return Method::Basic;
  if (name == "parallel") return Method::Parallel;
  if (name == "accelerated") return Method::Accelerated;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Monte Carlo moments

namespace {

struct Moments {
  std::vector<Vector> sum_v;   // v = B^{1/2}(x_k - x*)
  std::vector<Matrix> sum_vv;
  std::vector<double> err, err2, f, f2, cerr, cerr2, cf, cf2;
  std::vector<StepAudit> audit;

  Moments(std::size_t K1, Eigen::Index n)
      : sum_v(K1, Vector::Zero(n)),
        sum_vv(K1, Matrix::Zero(n, n)),
        err(K1, 0.0), err2(K1, 0.0), f(K1, 0.0), f2(K1, 0.0),
        cerr(K1, 0.0), cerr2(K1, 0.0), cf(K1, 0.0), cf2(K1, 0.0) {}

  void add(const Moments& o) {
    for (std::size_t k = 0; k < err.size(); ++k) {
      sum_v[k] += o.sum_v[k];
      sum_vv[k] += o.sum_vv[k];
      err[k] += o.err[k];
      err2[k] += o.err2[k];
      f[k] += o.f[k];
      f2[k] += o.f2[k];
      cerr[k] += o.cerr[k];
      cerr2[k] += o.cerr2[k];
      cf[k] += o.cf[k];
      cf2[k] += o.cf2[k];
    }
    audit.insert(audit.end(), o.audit.begin(), o.audit.end());
  }
};

IterationTrace run_one(const Reformulation& r, const Vector& x0, const MonteCarloConfig& cfg,
                       std::uint32_t replication) {
  SolverConfig sc = cfg.solver;
  sc.replication = replication;
  sc.max_iters = cfg.iterations;
  sc.tolerance.reset();
  sc.record = RecordFlags{false, false, true, cfg.audit};
  sc.execution = Execution::Serial;
  switch (cfg.method) {
    case Method::Basic: return run_basic(r, x0, sc);
    case Method::Parallel: return run_parallel(r, x0, sc);
    case Method::Accelerated: return accelerated_run(r, x0, sc, cfg.x1);
  }
  throw InvalidInput("unknown method");
}

void accumulate(const Reformulation& r, const IterationTrace& t, Moments& m) {
  const auto& B = r.system().B();
  const std::size_t K1 = m.err.size();
  if (t.iterates.size() != K1) throw Error("trajectory length mismatch");
  Vector running = Vector::Zero(t.x_star.size());
  for (std::size_t k = 0; k < K1; ++k) {
    const Vector e = t.iterates[k] - t.x_star;
    const Vector v = B.is_identity() ? e : Vector(B.sqrt() * e);
    m.sum_v[k] += v;
    m.sum_vv[k].noalias() += v * v.transpose();
    const double es = v.squaredNorm();
    m.err[k] += es;
    m.err2[k] += es * es;
    const double fv = r.f(t.iterates[k]);
    m.f[k] += fv;
    m.f2[k] += fv * fv;
  }
  // Cesaro averages over x_0..x_{k-1}; k = 0 mirrors k = 1.
  for (std::size_t k = 1; k < K1; ++k) {
    running += t.iterates[k - 1];
    const Vector xhat = running / static_cast<double>(k);
    const double ce = B.norm_sq(xhat - t.x_star);
    const double cfv = r.f(xhat);
    m.cerr[k] += ce;
    m.cerr2[k] += ce * ce;
    m.cf[k] += cfv;
    m.cf2[k] += cfv * cfv;
    if (k == 1) {
      m.cerr[0] += ce;
      m.cerr2[0] += ce * ce;
      m.cf[0] += cfv;
      m.cf2[0] += cfv * cfv;
    }
  }
  if (K1 == 1) {
    const double ce = B.norm_sq(t.iterates[0] - t.x_star);
    const double cfv = r.f(t.iterates[0]);
    m.cerr[0] += ce;
    m.cerr2[0] += ce * ce;
    m.cf[0] += cfv;
    m.cf2[0] += cfv * cfv;
  }
  m.audit.insert(m.audit.end(), t.audit.begin(), t.audit.end());
}

double se_from_sums(double s, double s2, double R) {
  const double mean = s / R;
  const double var = std::max(0.0, (s2 / R - mean * mean)) * R / (R - 1.0);
  return std::sqrt(var / R);
}

}  // namespace

MomentEstimates monte_carlo_moments(const Reformulation& r, const Vector& x0,
                                    const MonteCarloConfig& cfg, Execution exec) {
  if (cfg.replications < 2) throw InvalidInput("Monte Carlo needs at least 2 replications");
  if (cfg.replications > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw InvalidInput("too many replications");
  }
  const auto n = static_cast<Eigen::Index>(r.system().cols());
  const std::size_t K1 = cfg.iterations + 1;
  const long R = static_cast<long>(cfg.replications);
  const long blocks = (R + kReductionBlock - 1) / kReductionBlock;

  auto run_block = [&](long blk) {
    Moments m(K1, n);
    const long hi = std::min(R, (blk + 1) * kReductionBlock);
    for (long rep = blk * kReductionBlock; rep < hi; ++rep) {
      accumulate(r, run_one(r, x0, cfg, static_cast<std::uint32_t>(rep)), m);
    }
    return m;
  };

  Moments total(K1, n);
  if (exec == Execution::Parallel) {
    // Waves bound the number of live partials; combination stays in block order.
    const long wave = std::max<long>(1, thread_count());
    for (long start = 0; start < blocks; start += wave) {
      const long end = std::min(blocks, start + wave);
      std::vector<std::optional<Moments>> partial(static_cast<std::size_t>(end - start));
      std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
      for (long blk = start; blk < end; ++blk) {
        try {
          partial[static_cast<std::size_t>(blk - start)].emplace(run_block(blk));
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
      for (auto& p : partial) total.add(*p);
    }
  } else {
    for (long blk = 0; blk < blocks; ++blk) total.add(run_block(blk));
  }

  const double dR = static_cast<double>(R);
  const auto& sp = r.spectrum();
  const auto& B = r.system().B();
  MomentEstimates est;
  est.replications = cfg.replications;
  est.iterations = cfg.iterations;
  est.x_star = r.system().project(x0);
  for (std::size_t k = 0; k < K1; ++k) {
    const Vector mv = total.sum_v[k] / dR;
    Matrix cov = (total.sum_vv[k] / dR - mv * mv.transpose()) * (dR / (dR - 1.0));
    cov = 0.5 * (cov + cov.transpose());
    const Vector me = B.is_identity() ? mv : Vector(B.inv_sqrt() * mv);
    const Matrix cov_e = B.is_identity() ? cov : Matrix(B.inv_sqrt() * cov * B.inv_sqrt());
    const Matrix cov_t = sp.U.transpose() * cov * sp.U;
    est.mean_error.push_back(me);
    est.mean_error_se.push_back((cov_e.diagonal().cwiseMax(0.0) / dR).cwiseSqrt());
    est.mean_transformed.push_back(sp.U.transpose() * mv);
    est.mean_transformed_se.push_back((cov_t.diagonal().cwiseMax(0.0) / dR).cwiseSqrt());
    est.mean_error_norm_sq.push_back(mv.squaredNorm());
    est.mean_error_norm_sq_se.push_back(2.0 * std::sqrt(std::max(0.0, mv.dot(cov * mv)) / dR));
    est.error_sq.push_back(total.err[k] / dR);
    est.error_sq_se.push_back(se_from_sums(total.err[k], total.err2[k], dR));
    est.f_value.push_back(total.f[k] / dR);
    est.f_value_se.push_back(se_from_sums(total.f[k], total.f2[k], dR));
    est.cesaro_error_sq.push_back(total.cerr[k] / dR);
    est.cesaro_error_sq_se.push_back(se_from_sums(total.cerr[k], total.cerr2[k], dR));
    est.cesaro_f_value.push_back(total.cf[k] / dR);
    est.cesaro_f_value_se.push_back(se_from_sums(total.cf[k], total.cf2[k], dR));
  }
  est.audit = std::move(total.audit);
  return est;
}

// ---------------------------------------------------------------------------
// Exact expected iterates

ExpectedIterates expected_iterates(const Reformulation& r, const Vector& x0, Method method,
                                   const SolverConfig& cfg, std::size_t iterations,
                                   const std::optional<Vector>& x1) {
  const auto& atoms = r.finite_support();
  if (!atoms) throw InvalidInput("exact expected iterates need a finite-support distribution");
  const auto& sys = r.system();
  const auto& B = sys.B();
  const Vector x_star = sys.project(x0);
  auto mean_map = [&](const Vector& y) {
    Vector acc = Vector::Zero(y.size());
    for (const auto& a : *atoms) acc += a.probability * basic_step(y, a.sample, cfg.omega, sys);
    return acc;
  };
  ExpectedIterates out;
  auto push = [&](const Vector& m) {
    const Vector e = m - x_star;
    const Vector v = B.is_identity() ? e : Vector(B.sqrt() * e);
    out.mean_error.push_back(e);
    out.mean_transformed.push_back(r.spectrum().U.transpose() * v);
    out.mean_error_norm_sq.push_back(v.squaredNorm());
  };
  Vector m = x0;
  push(m);
  if (method == Method::Accelerated) {
    const double g = acceleration_params(r.spectrum(), cfg).gamma;
    if (iterations == 0) return out;
    Vector z_prev = mean_map(x0);
    m = x1 ? *x1 : x0;
    push(m);
    for (std::size_t k = 1; k < iterations; ++k) {
      Vector z = mean_map(m);
      m = g * z + (1.0 - g) * z_prev;
      z_prev = std::move(z);
      push(m);
    }
    return out;
  }
  for (std::size_t k = 0; k < iterations; ++k) {
    m = mean_map(m);
    push(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rates

double rho_basic(const Spectrum& sp, double omega) {
  const double omega_star = 2.0 / (sp.lambda_min_plus + sp.lambda_max);
  if (omega <= 0.0) return std::pow(1.0 - omega * sp.lambda_max, 2);
  if (omega <= omega_star) return std::pow(1.0 - omega * sp.lambda_min_plus, 2);
  return std::pow(1.0 - omega * sp.lambda_max, 2);
}

RatePrediction theoretical_rates(const Spectrum& sp, double omega, std::size_t tau,
                                 std::optional<double> mu) {
  if (tau < 1) throw InvalidInput("tau must be >= 1");
  const double lmax = sp.lambda_max;
  const double lmin = sp.lambda_min_plus;
  RatePrediction p;
  p.omega = omega;
  p.tau = tau;
  p.omega_star = 2.0 / (lmin + lmax);
  p.rho_basic = rho_basic(sp, omega);
  p.l2_upper = 1.0 - omega * (2.0 - omega) * lmin;
  p.l2_lower = 1.0 - omega * (2.0 - omega) * lmax;
  const double t = static_cast<double>(tau);
  p.xi = 1.0 / t + (1.0 - 1.0 / t) * lmax;
  p.rho_parallel = 1.0 - omega * (2.0 - omega * p.xi) * lmin;
  p.rho_parallel_optimal = 1.0 - lmin / p.xi;
  const double m = mu ? *mu : 0.99 * omega * lmin;
  p.accelerated = std::pow(1.0 - std::sqrt(std::max(0.0, m)), 2);
  p.f_first = 1.0 - 2.0 * lmin * omega + lmax * omega * omega;
  p.f_second = p.l2_upper;
  p.mean_converges = omega > 0.0 && omega < 2.0 / lmax;
  p.l2_valid = omega > 0.0 && omega < 2.0;
  p.f_first_valid = omega >= 0.0 && omega <= 2.0 / sp.zeta;
  p.accelerated_valid = m > 0.0 && m < omega * lmin && omega > 0.0 &&
                        omega <= (1.0 + 1e-12) / lmax;
  return p;
}

RateFit fit_rate(const std::vector<double>& series, std::size_t burn_in) {
  if (series.size() < burn_in + 5) {
    throw InvalidInput("fit_rate needs at least burn_in + 5 points (got " +
                       std::to_string(series.size()) + ")");
  }
  RateFit fit;
  // a series that reaches roundoff is fitted up to that point
  const double floor = std::max(kMachineFloor, kRoundoffRelative * series[0]);
  std::size_t n = series.size() - burn_in;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(series[burn_in + i] > floor)) {
      n = i;
      fit.floored = true;
      break;
    }
  }
  if (n < 2) {
    fit.rate = 0.0;
    fit.points = n;
    return fit;
  }
  std::vector<double> ys(n);
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = std::log(series[burn_in + i]);
    sx += static_cast<double>(i);
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - mx;
    sxx += dx * dx;
    sxy += dx * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = ys[i] - (my + slope * (static_cast<double>(i) - mx));
    rss += res * res;
  }
  fit.rate = std::exp(slope);
  fit.log_residual = std::sqrt(rss / static_cast<double>(n));
  fit.points = n;
  return fit;
}

// ---------------------------------------------------------------------------
// Recurrence

double iterate_recurrence(double E, double F, double xi0, double xi1, std::size_t k) {
  if (k == 0) return xi0;
  double a = xi0, b = xi1;
  for (std::size_t i = 1; i < k; ++i) {
    const double c = E * b + F * a;
    a = b;
    b = c;
  }
  return b;
}

RecurrenceSolution solve_recurrence(double E, double F, double xi0, double xi1) {
  RecurrenceSolution s;
  s.E = E;
  s.F = F;
  s.xi0 = xi0;
  s.xi1 = xi1;
  const double disc = E * E + 4.0 * F;
  const std::complex<double> sq = std::sqrt(std::complex<double>(disc, 0.0));
  s.root1 = (E + sq) / 2.0;
  s.root2 = (E - sq) / 2.0;
  s.oscillatory = disc < 0.0;
  if (s.oscillatory) {
    const double alpha = E / 2.0;
    const double beta = std::sqrt(-disc) / 2.0;
    s.modulus = std::sqrt(alpha * alpha + beta * beta);
    s.angle = std::atan2(beta, alpha);
    s.C0 = xi0 / 2.0;
    s.C1 = (xi1 / (2.0 * s.modulus) - s.C0 * std::cos(s.angle)) / std::sin(s.angle);
  } else {
    s.modulus = std::max(std::abs(s.root1), std::abs(s.root2));
  }
  return s;
}

double RecurrenceSolution::operator()(std::size_t k) const {
  if (!oscillatory) return iterate_recurrence(E, F, xi0, xi1, k);
  const double kk = static_cast<double>(k);
  return 2.0 * std::pow(modulus, kk) * (C0 * std::cos(angle * kk) + C1 * std::sin(angle * kk));
}

double RecurrenceSolution::envelope(std::size_t k) const {
  return 2.0 * std::pow(modulus, static_cast<double>(k)) * (std::abs(C0) + std::abs(C1));
}

double solve_recurrence(double E, double F, double xi0, double xi1, std::size_t k) {
  return solve_recurrence(E, F, xi0, xi1)(k);
}

}  // namespace stochlin
