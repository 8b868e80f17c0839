#include <random>

#include <benchmark/benchmark.h>

#include "shuffleprior/lap.hpp"
#include "shuffleprior/mcmc.hpp"
#include "shuffleprior/synthgen.hpp"

using namespace shuffleprior;

namespace {

Scenario scenario(std::size_t n, ModelScenario model) {
  ScenarioSpec spec;
  spec.model = model;
  spec.constraint = ConstraintSpec{SparseConstraint{n / 4}, n};
  spec.seed = 1;
  return generate(spec);
}

void BM_SolveExact(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = u(rng);
  const CostMatrix cost(c);
  for (auto _ : state) benchmark::DoNotOptimize(solve_exact(cost));
  state.SetComplexityN(n);
}
BENCHMARK(BM_SolveExact)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_SolveSinkhorn(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = u(rng);
  const CostMatrix cost(c);
  for (auto _ : state) benchmark::DoNotOptimize(solve_sinkhorn(cost));
}
BENCHMARK(BM_SolveSinkhorn)->Arg(256)->Arg(1024);

// cost per MH step; should not grow with n
void BM_ChainSteps(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Scenario sc = scenario(n, LinearScenario{20, 1.0, 3.0});
  ChainConfig cfg;
  cfg.steps = 20000;
  cfg.burn_in = 10000;
  const PriorSpec prior = PriorSpec::hamming(std::log(static_cast<double>(n)));
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(sc.data, sc.truth, prior, cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.steps));
}
BENCHMARK(BM_ChainSteps)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_ChainStepsMvn(benchmark::State& state) {
  const Scenario sc = scenario(static_cast<std::size_t>(state.range(0)), MvnScenario{});
  ChainConfig cfg;
  cfg.steps = 20000;
  cfg.burn_in = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(sc.data, sc.truth, PriorSpec::hamming(7.0), cfg));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.steps));
}
BENCHMARK(BM_ChainStepsMvn)->Arg(1000)->Arg(10000);

void BM_Mstep(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  ModelScenario model = LinearScenario{};
  if (kind == ModelKind::poisson) model = PoissonScenario{20, 1.0};
  if (kind == ModelKind::mvn) model = MvnScenario{};
  const Scenario sc = scenario(1000, model);
  const ReducedStats stats{sc.data.y, 1};
  for (auto _ : state) benchmark::DoNotOptimize(mstep(kind, sc.data, stats));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Mstep)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
