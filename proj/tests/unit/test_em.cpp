#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shuffleprior/em.hpp"
#include "shuffleprior/synthgen.hpp"

using namespace shuffleprior;

namespace {

Scenario linear_scenario(std::size_t n, std::size_t d, double sigma, std::size_t k, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.model = LinearScenario{d, sigma, 3.0};
  spec.constraint = ConstraintSpec{SparseConstraint{k}, n};
  spec.seed = seed;
  return generate(spec);
}

// log sum over permutations of p(pi) prod_i p(x_{pi(i)}, y_i), up to the prior normaliser
double log_marginal(const LinkedDataset& data, const Eigen::VectorXd& beta, double sigma2, double gamma) {
  const std::size_t n = data.n();
  std::vector<double> terms;
  for (const auto& p : oracle::all_permutations(n)) {
    double s = gamma * static_cast<double>(oracle::fixed_points(p));
    for (std::size_t i = 0; i < n; ++i)
      s += oracle::gaussian_logpdf(data.y(static_cast<Eigen::Index>(i), 0),
                                   data.x.row(static_cast<Eigen::Index>(p[i])).dot(beta), sigma2);
    terms.push_back(s);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double z = 0.0;
  for (double t : terms) z += std::exp(t - top);
  return top + std::log(z);
}

}  // namespace

TEST(Em, FrozenChainReturnsNaiveFit) {
  const Scenario sc = linear_scenario(60, 3, 0.5, 0, 1);
  EmConfig cfg;
  cfg.max_iterations = 5;
  cfg.chain.steps = 500;
  cfg.chain.burn_in = 100;
  const auto r = fit_em(sc.data, ModelKind::linear, PriorSpec::hamming(1e3), cfg);
  const auto naive = std::get<LinearParams>(naive_fit(ModelKind::linear, sc.data));
  const auto em = std::get<LinearParams>(r.params);
  EXPECT_LT((em.beta - naive.beta).norm(), 1e-10);
  EXPECT_NEAR(em.sigma2, naive.sigma2, 1e-10);
  EXPECT_TRUE(r.converged);
}

TEST(Em, RecoversNearlyNoiselessSparseShuffle) {
  const Scenario sc = linear_scenario(200, 5, 1e-3, 40, 2);
  EmConfig cfg;
  cfg.max_iterations = 30;
  cfg.chain.steps = 4000;
  cfg.chain.burn_in = 2000;
  cfg.chain.seed = 3;
  const auto r = fit_em(sc.data, ModelKind::linear, PriorSpec::hamming(std::log(200.0)), cfg);
  const double naive_err = ree(naive_fit(ModelKind::linear, sc.data), sc.truth);
  const double em_err = ree(r.params, sc.truth);
  EXPECT_LT(em_err, 0.02);
  EXPECT_LT(em_err, naive_err);
}

TEST(Em, ExactEstepIncreasesMarginalLikelihood) {
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    const Scenario sc = linear_scenario(7, 2, 0.5, 4, seed);
    EmConfig cfg;
    cfg.estep = EstepKind::exact;
    cfg.max_iterations = 25;
    cfg.tolerance = 1e-12;
    const double gamma = 0.7;
    const auto r = fit_em(sc.data, ModelKind::linear, PriorSpec::hamming(gamma), cfg);
    const auto naive = std::get<LinearParams>(naive_fit(ModelKind::linear, sc.data));
    double prev = log_marginal(sc.data, naive.beta, naive.sigma2, gamma);
    for (const auto& it : r.trajectory) {
      const Eigen::VectorXd beta = it.params.head(2);
      const double cur = log_marginal(sc.data, beta, it.params(2), gamma);
      EXPECT_GE(cur, prev - 1e-9);
      prev = cur;
    }
  }
}

TEST(Em, SameSeedSameResult) {
  const Scenario sc = linear_scenario(100, 4, 0.5, 30, 7);
  EmConfig cfg;
  cfg.max_iterations = 10;
  cfg.chain.steps = 2000;
  cfg.chain.burn_in = 1000;
  cfg.chain.seed = 42;
  const auto a = fit_em(sc.data, ModelKind::linear, PriorSpec::hamming(std::log(100.0)), cfg);
  const auto b = fit_em(sc.data, ModelKind::linear, PriorSpec::hamming(std::log(100.0)), cfg);
  EXPECT_EQ(flatten(a.params), flatten(b.params));
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i)
    EXPECT_EQ(a.trajectory[i].surrogate, b.trajectory[i].surrogate);
}

TEST(Em, TrajectoryCsvHasOneRowPerIteration) {
  const Scenario sc = linear_scenario(30, 2, 0.5, 5, 8);
  EmConfig cfg;
  cfg.max_iterations = 4;
  cfg.tolerance = 1e-300;
  cfg.chain.steps = 200;
  cfg.chain.burn_in = 100;
  const auto r = fit_em(sc.data, ModelKind::linear, PriorSpec::hamming(3.0), cfg);
  std::ostringstream os;
  write_trajectory_csv(os, r.trajectory);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
  EXPECT_EQ(s.rfind("iteration,surrogate,acceptance_rate,invalid_steps,theta0,theta1,theta2\n", 0), 0u);
}

TEST(Em, RejectsMismatchedInitialParams) {
  const Scenario sc = linear_scenario(20, 2, 0.5, 0, 9);
  EmConfig cfg;
  cfg.initial = PoissonParams{Eigen::VectorXd::Zero(2), 0.0};
  EXPECT_THROW(fit_em(sc.data, ModelKind::linear, PriorSpec::uniform(), cfg), std::invalid_argument);
}
