#include "stochlin/error.hpp"
#include "stochlin/reformulation.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace stochlin;

namespace {

LinearSystem reference_system() {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = 2;
  return LinearSystem(A, (Vector(2) << 1, 2).finished(), SpdOperator::identity(2));
}

LinearSystem random_system(std::mt19937_64& g, Eigen::Index m, Eigen::Index n, bool random_b = true) {
  const Matrix A = oracle::gaussian(m, n, g);
  const Vector b = A * oracle::gaussian(n, g);
  return LinearSystem(A, b, random_b ? SpdOperator(oracle::random_spd(n, g)) : SpdOperator::identity(n));
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(SketchedSystem, ProjectorProperties) {
  std::mt19937_64 g(21);
  const auto sys = random_system(g, 5, 4);
  StreamRng rng(1, {0, 0});
  const auto dist = SketchDistribution::gaussian(5, 2);
  for (int t = 0; t < 10; ++t) {
    const auto ss = sketched_system(sys, dist.sample(rng));
    const Matrix P = ss.hessian(sys.B());
    EXPECT_LT(max_abs(P * P - P), 1e-10);
    EXPECT_LT(asymmetry(sys.B().base() * P), 1e-10);
    EXPECT_LT(max_abs(ss.Z() - sys.A().transpose() * ss.H() * sys.A()), 1e-10);
  }
}

TEST(SketchedSystem, ValueAndGradient) {
  std::mt19937_64 g(22);
  const auto sys = random_system(g, 6, 3);
  const auto S = SketchSample::selection(6, {1, 4});
  const auto ss = sketched_system(sys, S);
  const Vector x = oracle::gaussian(3, g);
  const Vector r = sys.A() * x - sys.b();
  EXPECT_NEAR(stochastic_value(ss, x), 0.5 * r.dot(ss.H() * r), 1e-12);
  const Vector grad = stochastic_gradient(ss, x, sys.B());
  EXPECT_NEAR(stochastic_value(ss, x), 0.5 * sys.B().norm_sq(grad), 1e-10);
  // the gradient step lands on L_S
  const auto ls = sketched_solution_set(ss);
  EXPECT_LT((ls.A * (x - grad) - ls.b).norm(), 1e-10);
}

TEST(SketchedSystem, RejectsRowMismatch) {
  const auto sys = reference_system();
  EXPECT_THROW(sketched_system(sys, SketchSample::selection(3, {0})), InvalidInput);
}

TEST(ExpectedZ, KaczmarzEqualsNormalisedGram) {
  std::mt19937_64 g(23);
  for (int t = 0; t < 20; ++t) {
    const auto sys = random_system(g, 7, 4, false);
    const auto ez = expected_Z(sys, kaczmarz_distribution(sys.A()), {});
    ASSERT_TRUE(ez.exact);
    const Matrix ref = sys.A().transpose() * sys.A() / sys.A().squaredNorm();
    EXPECT_LT(max_abs(ez.mean - ref), 1e-12);
  }
}

TEST(ExpectedZ, EnumerationMatchesDenseOracle) {
  std::mt19937_64 g(24);
  const auto sys = random_system(g, 5, 3);
  for (const auto& dist : {SketchDistribution::block(5, 2), SketchDistribution::count_sketch(5, 2),
                           SketchDistribution::count_min(5, 2), SketchDistribution::block(5, 3, true)}) {
    const auto ez = expected_Z(sys, dist, {});
    ASSERT_TRUE(ez.exact);
    EXPECT_EQ(ez.atoms, *dist.support_size());
    const Matrix ref = oracle::expected_Z(sys.A(), sys.B().inverse(), *dist.support());
    EXPECT_LT(max_abs(ez.mean - ref), 1e-10) << to_string(dist.kind());
  }
}

TEST(ExpectedZ, SerialAndParallelAgreeBitwise) {
  std::mt19937_64 g(25);
  const auto sys = random_system(g, 12, 5);
  const auto dist = SketchDistribution::block(12, 3);
  ReformulationOptions o;
  o.execution = Execution::Serial;
  const auto a = expected_Z(sys, dist, o);
  o.execution = Execution::Parallel;
  const auto b = expected_Z(sys, dist, o);
  EXPECT_EQ(a.mean, b.mean);

  ReformulationOptions mc;
  mc.support_cap = 0;
  mc.mc_samples = 500;
  mc.seed = 3;
  mc.execution = Execution::Serial;
  const auto c = expected_Z(sys, dist, mc);
  mc.execution = Execution::Parallel;
  const auto d = expected_Z(sys, dist, mc);
  EXPECT_FALSE(c.exact);
  EXPECT_EQ(c.mean, d.mean);
}

TEST(ExpectedZ, MonteCarloWithinStandardErrors) {
  std::mt19937_64 g(26);
  const auto sys = random_system(g, 6, 3);
  const auto dist = SketchDistribution::block(6, 2);
  const auto exact = expected_Z(sys, dist, {});
  ReformulationOptions mc;
  mc.support_cap = 0;
  mc.mc_samples = 20000;
  mc.seed = 8;
  const auto est = expected_Z(sys, dist, mc);
  EXPECT_EQ(est.samples, 20000u);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      EXPECT_LE(std::abs(est.mean(i, j) - exact.mean(i, j)), 5.0 * est.entry_standard_error(i, j) + 1e-14);
  EXPECT_LE((est.mean - exact.mean).norm(), 10.0 * est.standard_error + 1e-12);
}

TEST(Spectrum, ReferenceProblem) {
  const Reformulation r(reference_system(), kaczmarz_distribution(reference_system().A()));
  const auto& sp = r.spectrum();
  EXPECT_NEAR(sp.lambdas(0), 0.8, 1e-12);
  EXPECT_NEAR(sp.lambdas(1), 0.2, 1e-12);
  EXPECT_NEAR(sp.lambda_max, 0.8, 1e-12);
  EXPECT_NEAR(sp.lambda_min_plus, 0.2, 1e-12);
  EXPECT_NEAR(sp.zeta, 4.0, 1e-12);
  EXPECT_EQ(sp.rank, 2u);
  EXPECT_TRUE(sp.exact);
}

TEST(Spectrum, MatchesSimilarityOracleAndLiesInUnitInterval) {
  std::mt19937_64 g(27);
  for (int t = 0; t < 10; ++t) {
    const auto sys = random_system(g, 6, 4);
    const Reformulation r(sys, SketchDistribution::count_sketch(6, 2));
    const auto& sp = r.spectrum();
    const Vector ref = oracle::spectrum_via_similarity(r.expected_Z().mean, sys.B().base());
    EXPECT_LT((sp.raw_lambdas - ref).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(sp.lambdas.minCoeff(), 0.0);
    EXPECT_LE(sp.lambdas.maxCoeff(), 1.0);
    EXPECT_LT(max_abs(sp.W - sys.B().inv_sqrt() * r.expected_Z().mean * sys.B().inv_sqrt()), 1e-12);
  }
}

TEST(Spectrum, FixedIdentityHasUnitConditionNumber) {
  std::mt19937_64 g(28);
  const auto sys = random_system(g, 6, 3);
  const Reformulation r(sys, SketchDistribution::fixed_identity(6));
  EXPECT_NEAR(r.spectrum().zeta, 1.0, 1e-10);
  EXPECT_NEAR(r.spectrum().lambda_max, 1.0, 1e-10);
}

TEST(Spectrum, RankDeficientSystemCountsOnlyNonzeroEigenvalues) {
  Matrix A(2, 3);
  A << 1, 0, 0, 0, 2, 0;
  const LinearSystem sys(A, (Vector(2) << 1, 2).finished(), SpdOperator::identity(3));
  const Reformulation r(sys, kaczmarz_distribution(A));
  EXPECT_EQ(r.spectrum().rank, 2u);
  EXPECT_NEAR(r.spectrum().lambda_min_plus, 0.2, 1e-12);
  EXPECT_NEAR(r.spectrum().lambdas(2), 0.0, 1e-14);
}

TEST(Spectrum, ZeroMatrixIsDegenerate) {
  const LinearSystem sys(Matrix::Zero(2, 2), Vector::Zero(2), SpdOperator::identity(2));
  EXPECT_THROW(Reformulation(sys, SketchDistribution::coordinate({0.5, 0.5})), DegenerateSpectrum);
}

TEST(Reformulation, FunctionIsExpectationOfSampleFunctions) {
  std::mt19937_64 g(29);
  const auto sys = random_system(g, 5, 3);
  const auto dist = SketchDistribution::block(5, 2);
  const Reformulation r(sys, dist);
  const auto atoms = *r.finite_support();
  for (int t = 0; t < 5; ++t) {
    const Vector x = oracle::gaussian(3, g);
    double f = 0.0;
    Vector grad = Vector::Zero(3);
    for (const auto& a : atoms) {
      const auto ss = sketched_system(sys, a.sample);
      f += a.probability * stochastic_value(ss, x);
      grad += a.probability * stochastic_gradient(ss, x, sys.B());
    }
    EXPECT_NEAR(r.f(x), f, 1e-10 * (1 + f));
    EXPECT_LT((r.grad_f(x) - grad).norm(), 1e-10 * (1 + grad.norm()));
  }
}

TEST(Exactness, Verdicts) {
  const auto ref = reference_system();
  EXPECT_EQ(check_exactness(Reformulation(ref, kaczmarz_distribution(ref.A()))), Exactness::Exact);

  const LinearSystem id(Matrix::Identity(2, 2), Vector::Ones(2), SpdOperator::identity(2));
  EXPECT_EQ(check_exactness(Reformulation(id, SketchDistribution::coordinate({1.0, 0.0}))), Exactness::NotExact);

  ReformulationOptions mc;
  mc.mc_samples = 200;
  EXPECT_EQ(check_exactness(Reformulation(ref, SketchDistribution::gaussian(2, 1), mc)), Exactness::Undecidable);

  EXPECT_EQ(to_string(Exactness::Exact), "exact");
  EXPECT_EQ(to_string(Exactness::NotExact), "not-exact");
  EXPECT_EQ(to_string(Exactness::Undecidable), "undecidable");
}

TEST(Exactness, RankDeficientFullSupportIsExact) {
  std::mt19937_64 g(30);
  const Matrix A = oracle::gaussian(6, 2, g) * oracle::gaussian(2, 4, g);
  const LinearSystem sys(A, A * oracle::gaussian(4, g), SpdOperator(oracle::random_spd(4, g)));
  EXPECT_EQ(check_exactness(Reformulation(sys, kaczmarz_distribution(A))), Exactness::Exact);
}
