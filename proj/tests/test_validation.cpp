#include "stochlin/validation.hpp"

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

ValidationOptions quick() {
  ValidationOptions o;
  o.seed = 5;
  o.replications = 300;
  o.iterations = 20;
  o.random_points = 20;
  o.oracle_instances = 50;
  return o;
}

const CheckResult& find(const std::vector<CheckResult>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (r.id == id) return r;
  throw std::runtime_error("missing " + id);
}

}  // namespace

TEST(IdentityResiduals, RandomInstances) {
  std::mt19937_64 g(61);
  for (int t = 0; t < 30; ++t) {
    const Matrix A = oracle::gaussian(6, 4, g);
    const LinearSystem sys(A, A * oracle::gaussian(4, g), SpdOperator(oracle::random_spd(4, g)));
    const auto S = SketchSample::dense(oracle::gaussian(6, 2, g));
    const auto res = stochastic_identity_residuals(sys, S, oracle::gaussian(4, g));
    EXPECT_LT(res.gradient, 1e-8);
    EXPECT_LT(res.value, 1e-8);
    EXPECT_LT(res.zero, 1e-12);
  }
}

TEST(PathwiseResiduals, DetectsCorruptedAudit) {
  StepAudit good{0, 0, 2.0, 2.0 - 2 * 1.0 * 1.0 * 0.5, 0.5, 2 * 0.5, 1.0};
  EXPECT_LT(pathwise_residuals({good}).distance, 1e-15);
  StepAudit bad = good;
  bad.error_after += 0.1;
  EXPECT_GT(pathwise_residuals({good, bad}).distance, 0.04);
  EXPECT_EQ(pathwise_residuals({good, bad}).steps, 2u);
}

TEST(TheoremSuite, ReferenceProblemPassesEveryCheck) {
  const auto sys = reference_system();
  const Reformulation r(sys, kaczmarz_distribution(sys.A()));
  const auto results = run_theorem_suite(r, quick());
  ASSERT_EQ(results.size(), theorem_check_ids().size());
  for (const auto& c : results) EXPECT_EQ(c.status, CheckStatus::Pass) << c.id << ": " << c.detail;
}

TEST(TheoremSuite, RandomBlockProblem) {
  std::mt19937_64 g(62);
  const Matrix A = oracle::gaussian(6, 3, g);
  const LinearSystem sys(A, A * oracle::gaussian(3, g), SpdOperator(oracle::random_spd(3, g)));
  const Reformulation r(sys, SketchDistribution::block(6, 2));
  for (const auto& c : run_theorem_suite(r, quick())) {
    EXPECT_NE(c.status, CheckStatus::Fail) << c.id << ": " << c.detail;
  }
}

TEST(TheoremSuite, NotExactReformulation) {
  const LinearSystem sys(Matrix::Identity(2, 2), Vector::Ones(2), SpdOperator::identity(2));
  const Reformulation r(sys, SketchDistribution::coordinate({1.0, 0.0}));
  auto o = quick();
  o.enabled = {"theorem.exactness", "theorem.equivalence", "appendix.range-eigen-bound", "lemma.quadratic-bounds"};
  const auto rs = run_theorem_suite(r, o);
  ASSERT_EQ(rs.size(), 4u);
  EXPECT_EQ(find(rs, "theorem.exactness").status, CheckStatus::Pass);
  EXPECT_NE(find(rs, "theorem.exactness").detail.find("not-exact"), std::string::npos);
  EXPECT_EQ(find(rs, "theorem.equivalence").status, CheckStatus::Pass);
  EXPECT_EQ(find(rs, "appendix.range-eigen-bound").status, CheckStatus::Skip);
  EXPECT_EQ(find(rs, "lemma.quadratic-bounds").status, CheckStatus::Pass);
}

TEST(TheoremSuite, MonteCarloSpectrumSkipsExactOnlyChecks) {
  const auto sys = reference_system();
  ReformulationOptions ro;
  ro.mc_samples = 20000;
  ro.seed = 2;
  const Reformulation r(sys, SketchDistribution::gaussian(2, 1), ro);
  auto o = quick();
  o.enabled = {"theorem.exactness", "theorem.equivalence", "theorem.accelerated-rate", "theorem.expected-iterates"};
  const auto rs = run_theorem_suite(r, o);
  EXPECT_EQ(find(rs, "theorem.exactness").status, CheckStatus::Skip);
  EXPECT_EQ(find(rs, "theorem.equivalence").status, CheckStatus::Skip);
  EXPECT_EQ(find(rs, "theorem.accelerated-rate").status, CheckStatus::Skip);
  EXPECT_EQ(find(rs, "theorem.expected-iterates").status, CheckStatus::Pass)
      << find(rs, "theorem.expected-iterates").detail;
}

TEST(TheoremSuite, ResultsAreReproducible) {
  const auto sys = reference_system();
  const Reformulation r(sys, kaczmarz_distribution(sys.A()));
  auto o = quick();
  o.enabled = {"theorem.l2-band", "theorem.parallel-l2"};
  const auto a = run_theorem_suite(r, o);
  o.execution = Execution::Serial;
  const auto b = run_theorem_suite(r, o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}
