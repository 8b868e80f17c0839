#include <algorithm>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shuffleprior/synthgen.hpp"

using namespace shuffleprior;

namespace {

ScenarioSpec linear_spec(std::size_t n, std::size_t k, double sigma, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.model = LinearScenario{4, sigma, 3.0};
  spec.constraint = ConstraintSpec{SparseConstraint{k}, n};
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST(Generate, NoShuffleAndNoNoiseIsExact) {
  const Scenario sc = generate(linear_spec(50, 0, 0.0, 1));
  EXPECT_TRUE(sc.pi_star.is_identity());
  const auto& truth = std::get<LinearParams>(sc.truth);
  EXPECT_LT((sc.data.y.col(0) - sc.data.x * truth.beta).norm(), 1e-12);
  EXPECT_EQ(truth.sigma2, 0.0);
}

TEST(Generate, BetaHasRequestedNorm) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Scenario sc = generate(linear_spec(50, 5, 1.0, s));
    EXPECT_NEAR(std::get<LinearParams>(sc.truth).beta.norm(), 3.0, 1e-12);
  }
}

TEST(Generate, ReproducibleFromSeed) {
  const Scenario a = generate(linear_spec(80, 20, 1.0, 7));
  const Scenario b = generate(linear_spec(80, 20, 1.0, 7));
  const Scenario c = generate(linear_spec(80, 20, 1.0, 8));
  EXPECT_EQ(a.data.x, b.data.x);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_EQ(a.pi_star, b.pi_star);
  EXPECT_NE(a.data.y, c.data.y);
}

TEST(Generate, ShuffledPairsMatchTruthAfterUnshuffle) {
  const Scenario sc = generate(linear_spec(100, 40, 0.0, 2));
  EXPECT_LE(displaced_count(sc.pi_star.targets()), 40u);
  const LinkedDataset un = unshuffle(sc.data, sc.pi_star);
  EXPECT_LT((un.y.col(0) - un.x * std::get<LinearParams>(sc.truth).beta).norm(), 1e-12);
  // unshuffling only reorders the rows of X
  std::vector<double> a(sc.data.x.col(0).data(), sc.data.x.col(0).data() + 100);
  std::vector<double> b(un.x.col(0).data(), un.x.col(0).data() + 100);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(Generate, ConstraintFamiliesAreRespected) {
  ScenarioSpec spec;
  spec.constraint = ConstraintSpec{BandedConstraint{3}, 60};
  spec.model = MvnScenario{};
  for (std::uint64_t s = 0; s < 5; ++s) {
    spec.seed = s;
    EXPECT_LE(max_displacement(generate(spec).pi_star.targets()), 3u);
  }
  spec.constraint = ConstraintSpec{SparseBlockConstraint{2, 6}, 60};
  spec.model = PoissonScenario{3, 1.0};
  const auto blocks = contiguous_blocks(60, 6);
  for (std::uint64_t s = 0; s < 5; ++s) {
    spec.seed = s;
    const Scenario sc = generate(spec);
    EXPECT_TRUE(satisfies(spec.constraint, sc.pi_star));
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(blocks[i], blocks[sc.pi_star[i]]);
  }
}

TEST(Generate, MvnRowsHaveTheRequestedCorrelation) {
  ScenarioSpec spec;
  spec.model = MvnScenario{2, 3, 2.0, 0.8};
  spec.constraint = ConstraintSpec{SparseConstraint{500}, 20000};
  spec.seed = 3;
  const Scenario sc = generate(spec);
  const LinkedDataset un = unshuffle(sc.data, sc.pi_star);
  Eigen::MatrixXd z(20000, 5);
  z << un.x, un.y;
  const Eigen::MatrixXd c = z.rowwise() - z.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / 20000.0;
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(cov(i, j), i == j ? 2.0 : 0.8, 0.06);
  const Eigen::MatrixXd corr = correlation_from_precision(std::get<MvnParams>(sc.truth).precision);
  EXPECT_NEAR(corr(0, 4), 0.4, 1e-12);
}

TEST(Generate, PoissonClipsLargePredictors) {
  ScenarioSpec spec;
  spec.model = PoissonScenario{2, 15.0};
  spec.constraint = ConstraintSpec{SparseConstraint{0}, 200};
  spec.seed = 4;
  const Scenario sc = generate(spec);
  EXPECT_GT(sc.clipped_predictors, 0u);
  EXPECT_TRUE(sc.data.y.allFinite());
}

TEST(Generate, RejectsBadSpecs) {
  ScenarioSpec spec = linear_spec(10, 2, 1.0, 0);
  spec.model = LinearScenario{10, 1.0, 3.0};
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec.model = MvnScenario{2, 2, 1.0, 1.5};
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec.model = LinearScenario{1, 1.0, 3.0, true};
  EXPECT_THROW(generate(spec), std::invalid_argument);
}

TEST(Ree, Examples) {
  Eigen::VectorXd t(2), e(2);
  t << 3, 4;
  e << 3, 4;
  EXPECT_EQ(relative_error(e, t), 0.0);
  e << 0, 0;
  EXPECT_DOUBLE_EQ(relative_error(e, t), 1.0);
  e << 6, 8;
  EXPECT_DOUBLE_EQ(ree(LinearParams{e, 1.0}, LinearParams{t, 1.0}), 1.0);
  EXPECT_THROW(relative_error(t, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  EXPECT_THROW(ree(LinearParams{t, 1.0}, PoissonParams{t, 0.0}), std::invalid_argument);
}

TEST(Ree, CorrelationErrorMatchesOracle) {
  Rng rng(5);
  std::normal_distribution<double> z;
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd a(4, 4), b(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) {
      a(i) = z(rng);
      b(i) = z(rng);
    }
    const Eigen::MatrixXd pa = a * a.transpose() + Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd pb = b * b.transpose() + Eigen::MatrixXd::Identity(4, 4);
    EXPECT_NEAR(correlation_error(pa, pb), (oracle::correlation_of(pa) - oracle::correlation_of(pb)).norm(), 1e-12);
    EXPECT_NEAR(ree(MvnParams{Eigen::VectorXd::Zero(4), pa}, MvnParams{Eigen::VectorXd::Zero(4), pa}), 0.0, 1e-14);
  }
  // precision and covariance scaled by a constant give the same correlations
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(3, 3) + 0.2 * Eigen::MatrixXd::Ones(3, 3);
  EXPECT_NEAR(correlation_error(p, 7.0 * p), 0.0, 1e-14);
}
