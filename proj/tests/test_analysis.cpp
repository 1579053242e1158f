#include "stochlin/analysis.hpp"
#include "stochlin/error.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace stochlin;

namespace {

LinearSystem reference_system() {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = 2;
  return LinearSystem(A, (Vector(2) << 1, 2).finished(), SpdOperator::identity(2));
}

Reformulation reference() { return Reformulation(reference_system(), kaczmarz_distribution(reference_system().A())); }

LinearSystem random_system(std::mt19937_64& g, Eigen::Index m, Eigen::Index n) {
  const Matrix A = oracle::gaussian(m, n, g);
  return LinearSystem(A, A * oracle::gaussian(n, g), SpdOperator(oracle::random_spd(n, g)));
}

}  // namespace

TEST(Method, NamesRoundTrip) {
  for (auto m : {Method::Basic, Method::Parallel, Method::Accelerated}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_FALSE(parse_method("heavy-ball"));
}

TEST(Rates, ReferenceValues) {
  const auto r = reference();
  const auto& sp = r.spectrum();
  EXPECT_NEAR(rho_basic(sp, 1.0), 0.64, 1e-12);
  EXPECT_NEAR(rho_basic(sp, 2.0), 0.36, 1e-12);
  EXPECT_NEAR(rho_basic(sp, 2.6), std::pow(1 - 2.6 * 0.8, 2), 1e-12);
  EXPECT_NEAR(rho_basic(sp, -0.5), std::pow(1 + 0.5 * 0.8, 2), 1e-12);
  const auto p = theoretical_rates(sp, 1.0, 2);
  EXPECT_NEAR(p.omega_star, 2.0, 1e-12);
  EXPECT_NEAR(p.l2_upper, 0.8, 1e-12);
  EXPECT_NEAR(p.l2_lower, 0.2, 1e-12);
  EXPECT_NEAR(p.xi, 0.9, 1e-12);
  EXPECT_NEAR(p.rho_parallel, 1 - 1.0 * (2 - 0.9) * 0.2, 1e-12);
  EXPECT_NEAR(p.rho_parallel_optimal, 1 - 0.2 / 0.9, 1e-12);
  EXPECT_NEAR(p.f_first, 1 - 0.4 + 0.8, 1e-12);
  EXPECT_NEAR(p.f_second, 0.8, 1e-12);
  EXPECT_TRUE(p.mean_converges);
  EXPECT_FALSE(theoretical_rates(sp, 2.6).mean_converges);
  EXPECT_FALSE(theoretical_rates(sp, 1.0).f_first_valid);  // needs omega <= 2/zeta = 0.5
  EXPECT_TRUE(theoretical_rates(sp, 0.25).f_first_valid);
  const auto a = theoretical_rates(sp, 1.25, 1, 0.2);
  EXPECT_NEAR(a.accelerated, std::pow(1 - std::sqrt(0.2), 2), 1e-12);
  EXPECT_TRUE(a.accelerated_valid);
}

TEST(Rates, ParallelOptimumIsInverseXi) {
  const auto r = reference();
  for (std::size_t tau : {1u, 2u, 8u, 64u}) {
    const double xi = theoretical_rates(r.spectrum(), 1.0, tau).xi;
    const double best = theoretical_rates(r.spectrum(), 1.0 / xi, tau).rho_parallel;
    EXPECT_NEAR(best, theoretical_rates(r.spectrum(), 1.0, tau).rho_parallel_optimal, 1e-12);
    for (double d : {-0.05, 0.05}) EXPECT_LT(best, theoretical_rates(r.spectrum(), 1.0 / xi + d, tau).rho_parallel);
  }
}

TEST(Rates, BasicRateIsContinuousAndMinimalAtOmegaStar) {
  const auto r = reference();
  const auto& sp = r.spectrum();
  const double ws = 2.0 / (sp.lambda_min_plus + sp.lambda_max);
  EXPECT_NEAR(rho_basic(sp, ws - 1e-9), rho_basic(sp, ws + 1e-9), 1e-8);
  for (int j = 1; j < 200; ++j) EXPECT_GE(rho_basic(sp, j * 0.0125), rho_basic(sp, ws) - 1e-15);
}

TEST(FitRate, GeometricSeries) {
  std::vector<double> s;
  for (int k = 0; k < 30; ++k) s.push_back(3.0 * std::pow(0.7, k));
  const auto fit = fit_rate(s, 5);
  EXPECT_NEAR(fit.rate, 0.7, 1e-12);
  EXPECT_LT(fit.log_residual, 1e-12);
  EXPECT_EQ(fit.points, 25u);
  EXPECT_FALSE(fit.floored);
  EXPECT_THROW(fit_rate(std::vector<double>(9, 1.0), 5), InvalidInput);
  s.assign(10, 0.0);
  EXPECT_TRUE(fit_rate(s, 0).floored);
  EXPECT_EQ(fit_rate(s, 0).rate, 0.0);
  // exact convergence after a few steps: fitted on the nonzero head only
  s = {1.0, 0.5, 0.25, 0.125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  const auto head = fit_rate(s, 0);
  EXPECT_NEAR(head.rate, 0.5, 1e-12);
  EXPECT_EQ(head.points, 4u);
}

TEST(Recurrence, HandExample) {
  // xi_{k+2} = -xi_k / 4: modulus 1/2, angle pi/2
  const auto s = solve_recurrence(0.0, -0.25, 1.0, 0.0);
  ASSERT_TRUE(s.oscillatory);
  EXPECT_NEAR(s.modulus, 0.5, 1e-15);
  EXPECT_NEAR(s.angle, std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(s(2), -0.25, 1e-15);
  EXPECT_NEAR(s(4), 1.0 / 16, 1e-15);
  EXPECT_NEAR(s(3), 0.0, 1e-15);
}

TEST(Recurrence, ClosedFormMatchesIterationWithinEnvelope) {
  std::mt19937_64 g(41);
  std::uniform_real_distribution<double> M(0.3, 0.999), th(0.1, 3.0), x(-2, 2);
  for (int t = 0; t < 200; ++t) {
    const double m = M(g), a = th(g);
    const double E = 2 * m * std::cos(a), F = -m * m;
    const auto s = solve_recurrence(E, F, x(g), x(g));
    for (std::size_t k = 0; k < 100; ++k) {
      const double it = iterate_recurrence(E, F, s.xi0, s.xi1, k);
      EXPECT_NEAR(s(k), it, 1e-10 * s.envelope(k) + 1e-300);
      EXPECT_LE(std::abs(it), s.envelope(k) * (1 + 1e-10) + 1e-300);
    }
  }
}

TEST(Recurrence, RealRootsFallBackToIteration) {
  const auto s = solve_recurrence(1.0, 0.1, 1.0, 2.0);
  EXPECT_FALSE(s.oscillatory);
  EXPECT_DOUBLE_EQ(s(5), iterate_recurrence(1.0, 0.1, 1.0, 2.0, 5));
}

TEST(MonteCarlo, SerialAndParallelAgreeBitwise) {
  std::mt19937_64 g(42);
  const Reformulation r(random_system(g, 6, 3), SketchDistribution::block(6, 2));
  MonteCarloConfig mc;
  mc.replications = 150;
  mc.iterations = 10;
  mc.solver.seed = 5;
  for (auto m : {Method::Basic, Method::Parallel, Method::Accelerated}) {
    mc.method = m;
    mc.solver.tau = m == Method::Parallel ? 3 : 1;
    mc.solver.omega = m == Method::Accelerated ? 1.0 / r.spectrum().lambda_max : 1.0;
    const auto a = monte_carlo_moments(r, Vector::Zero(3), mc, Execution::Serial);
    const auto b = monte_carlo_moments(r, Vector::Zero(3), mc, Execution::Parallel);
    EXPECT_EQ(a.error_sq, b.error_sq);
    EXPECT_EQ(a.f_value_se, b.f_value_se);
    EXPECT_EQ(a.mean_error_norm_sq, b.mean_error_norm_sq);
    EXPECT_EQ(a.cesaro_f_value, b.cesaro_f_value);
  }
}

TEST(MonteCarlo, MatchesIndependentReplications) {
  const auto r = reference();
  MonteCarloConfig mc;
  mc.replications = 20;
  mc.iterations = 6;
  mc.solver.seed = 9;
  const auto est = monte_carlo_moments(r, Vector::Zero(2), mc);
  std::vector<double> mean(7, 0.0);
  for (std::uint32_t rep = 0; rep < 20; ++rep) {
    SolverConfig sc = mc.solver;
    sc.replication = rep;
    sc.max_iters = 6;
    const auto t = run_basic(r, Vector::Zero(2), sc);
    for (std::size_t k = 0; k < 7; ++k) mean[k] += t.error_sq[k] / 20.0;
  }
  for (std::size_t k = 0; k < 7; ++k) EXPECT_NEAR(est.error_sq[k], mean[k], 1e-14);
}

TEST(MonteCarlo, CesaroAverages) {
  const LinearSystem sys(Matrix::Identity(2, 2), Vector::Ones(2), SpdOperator::identity(2));
  const Reformulation r(sys, SketchDistribution::fixed_identity(2));
  MonteCarloConfig mc;
  mc.replications = 4;
  mc.iterations = 5;
  const auto est = monte_carlo_moments(r, Vector::Zero(2), mc);
  // x_0 = 0 and x_k = x* afterwards, so xhat_k - x* = -x*/k
  for (std::size_t k = 1; k <= 5; ++k) EXPECT_NEAR(est.cesaro_error_sq[k], 2.0 / (k * k), 1e-14);
  EXPECT_EQ(est.cesaro_error_sq[0], est.cesaro_error_sq[1]);
  EXPECT_NEAR(est.error_sq[1], 0.0, 1e-28);
}

TEST(ExpectedIterates, BasicEqualsSpectralClosedForm) {
  std::mt19937_64 g(43);
  const Reformulation r(random_system(g, 5, 3), SketchDistribution::count_min(5, 2));
  SolverConfig sc;
  sc.omega = 1.3;
  const Vector x0 = oracle::gaussian(3, g);
  const auto ex = expected_iterates(r, x0, Method::Basic, sc, 15);
  const Vector t0 = ex.mean_transformed[0];
  for (std::size_t k = 0; k <= 15; ++k) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double pred = std::pow(1 - 1.3 * r.spectrum().lambdas(i), static_cast<double>(k)) * t0(i);
      EXPECT_NEAR(ex.mean_transformed[k](i), pred, 1e-11 * t0.cwiseAbs().maxCoeff());
    }
  }
}

TEST(ExpectedIterates, AcceleratedFollowsTwoTermRecursion) {
  const auto r = reference();
  SolverConfig sc;
  sc.omega = 1.25;
  const auto p = acceleration_params(r.spectrum(), sc);
  const auto ex = expected_iterates(r, Vector::Zero(2), Method::Accelerated, sc, 20);
  ASSERT_EQ(ex.mean_transformed.size(), 21u);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double a = 1 - 1.25 * r.spectrum().lambdas(i);
    const auto s = solve_recurrence(p.gamma * a, (1 - p.gamma) * a, ex.mean_transformed[0](i),
                                    ex.mean_transformed[1](i));
    for (std::size_t k = 0; k <= 20; ++k) EXPECT_NEAR(ex.mean_transformed[k](i), s(k), 1e-12);
  }
}

TEST(ExpectedIterates, NeedsFiniteSupport) {
  ReformulationOptions o;
  o.mc_samples = 100;
  const Reformulation r(reference_system(), SketchDistribution::gaussian(2, 1), o);
  EXPECT_THROW(expected_iterates(r, Vector::Zero(2), Method::Basic, {}, 3), InvalidInput);
}

TEST(MonteCarlo, MeanWithinStandardErrorsOfExactMean) {
  std::mt19937_64 g(44);
  const Reformulation r(random_system(g, 6, 3), SketchDistribution::block(6, 2));
  MonteCarloConfig mc;
  mc.replications = 2000;
  mc.iterations = 10;
  mc.solver.omega = 1.1;
  mc.solver.seed = 1;
  const Vector x0 = oracle::gaussian(3, g);
  const auto est = monte_carlo_moments(r, x0, mc);
  const auto ex = expected_iterates(r, x0, Method::Basic, mc.solver, 10);
  int outside = 0;
  for (std::size_t k = 1; k <= 10; ++k)
    for (Eigen::Index i = 0; i < 3; ++i)
      if (std::abs(est.mean_transformed[k](i) - ex.mean_transformed[k](i)) > 4 * est.mean_transformed_se[k](i) + 1e-12)
        ++outside;
  EXPECT_EQ(outside, 0);
}
