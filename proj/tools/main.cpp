#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "shuffleprior/baselines.hpp"
#include "shuffleprior/bayes.hpp"
#include "shuffleprior/em.hpp"
#include "shuffleprior/experiments.hpp"
#include "shuffleprior/io.hpp"
#include "shuffleprior/priors.hpp"
#include "shuffleprior/synthgen.hpp"

namespace sp = shuffleprior;

namespace {

// "-" or empty writes to stdout
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct ModelOptions {
  std::string model = "lr";
  std::size_t d = 20;
  double sigma = 1.0;
  double beta_norm = 3.0;
  std::size_t p = 5, q = 5;
  double tau = 1.0, rho = 0.8;

  void add(CLI::App* app) {
    app->add_option("--model", model, "lr, poisson or mvn")->capture_default_str();
    app->add_option("--dim", d, "number of covariates (LR, Poisson)")->capture_default_str();
    app->add_option("--sigma", sigma, "noise level (LR)")->capture_default_str();
    app->add_option("--beta-norm", beta_norm, "norm of the true coefficients")->capture_default_str();
    app->add_option("--mvn-p", p, "x block size (MVN)")->capture_default_str();
    app->add_option("--mvn-q", q, "y block size (MVN)")->capture_default_str();
    app->add_option("--mvn-tau", tau, "marginal variance (MVN)")->capture_default_str();
    app->add_option("--mvn-rho", rho, "equicorrelation (MVN)")->capture_default_str();
  }

  sp::ModelScenario scenario() const {
    switch (sp::parse_model_kind(model)) {
      case sp::ModelKind::linear: return sp::LinearScenario{d, sigma, beta_norm, false};
      case sp::ModelKind::poisson: return sp::PoissonScenario{d, beta_norm};
      default: return sp::MvnScenario{p, q, tau, rho};
    }
  }
};

sp::PriorSpec make_prior(const std::string& name, std::optional<double> gamma, std::size_t n, std::size_t bandwidth,
                         const std::vector<std::size_t>& block_of) {
  if (name == "uniform") return sp::PriorSpec::uniform();
  if (name == "hamming") return sp::PriorSpec::hamming(gamma.value_or(std::log(static_cast<double>(n))));
  if (name == "banded") return sp::PriorSpec(gamma.value_or(1.0), sp::BandedMode{bandwidth, {}});
  if (name == "block") {
    if (block_of.size() != n) throw std::invalid_argument("block prior needs --blocks or --block-ids");
    return sp::PriorSpec(gamma.value_or(std::log(static_cast<double>(n))), sp::BlockMode{block_of, true});
  }
  throw std::invalid_argument("unknown prior '" + name + "'");
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  ModelOptions model;
  std::string family = "sparse";
  double level = 0.3;
  std::size_t n = 1000;
  std::size_t blocks = 50;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string truth;
  std::string perm;
};

void run_simulate(const SimulateArgs& a) {
  sp::RunConfig cfg;
  cfg.model = a.model.scenario();
  cfg.family = sp::parse_constraint_family(a.family);
  cfg.levels = {a.level};
  cfg.n = a.n;
  cfg.blocks = a.blocks;
  cfg.seed_base = a.seed;
  cfg.methods = {sp::Method::naive};
  cfg.validate();
  const sp::Scenario sc = sp::grid_scenario(cfg, 0, 0);
  Output out(a.out);
  sp::write_dataset_csv(out.stream(), sc.data);
  if (!a.truth.empty()) {
    Output t(a.truth);
    sp::write_params_json(t.stream(), sc.truth, &sc.pi_star);
  }
  if (!a.perm.empty()) {
    Output t(a.perm);
    sp::write_permutation_csv(t.stream(), sc.pi_star);
  }
  if (sc.clipped_predictors > 0)
    fmt::print(std::cerr, "note: {} Poisson linear predictors were clipped at 20\n", sc.clipped_predictors);
}

// ---- fit ----------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string model = "lr";
  std::string method = "em";
  std::string prior = "hamming";
  std::optional<double> gamma;
  std::size_t bandwidth = 5;
  std::size_t blocks = 0;
  std::string block_ids;
  double alpha = 0.0;
  std::size_t em_iters = 400;
  std::size_t mcmc_steps = 8000;
  std::size_t burn_in = 4000;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string trajectory;
  std::string perm;
};

void run_fit(const FitArgs& a) {
  const sp::LinkedDataset data = sp::read_dataset_csv(a.data);
  data.validate();
  const std::size_t n = data.n();
  const sp::ModelKind kind = sp::parse_model_kind(a.model);
  std::vector<std::size_t> block_of;
  if (!a.block_ids.empty())
    block_of = sp::read_block_ids(a.block_ids);
  else if (a.blocks > 0)
    block_of = sp::contiguous_blocks(n, a.blocks);

  const sp::Method method = sp::parse_method(a.method);
  sp::ModelParams est;
  std::optional<sp::Permutation> map;
  switch (method) {
    case sp::Method::naive: est = sp::naive_fit(kind, data); break;
    case sp::Method::em:
    case sp::Method::emh:
    case sp::Method::eml:
    case sp::Method::emb: {
      std::string prior = a.prior;
      if (method == sp::Method::emh) prior = "hamming";
      if (method == sp::Method::eml) prior = "banded";
      if (method == sp::Method::emb) prior = "block";
      const sp::PriorSpec spec = make_prior(prior, a.gamma, n, a.bandwidth, block_of);
      sp::EmConfig em;
      em.max_iterations = a.em_iters;
      em.chain.steps = a.mcmc_steps;
      em.chain.burn_in = a.burn_in;
      em.chain.seed = a.seed;
      if (prior == "banded") em.chain.scheme = sp::LocalSwap{a.bandwidth};
      if (prior == "block") em.chain.scheme = sp::BlockSwap{block_of};
      const sp::EmResult r = sp::fit_em(data, kind, spec, em);
      est = r.params;
      if (!a.trajectory.empty()) {
        Output t(a.trajectory);
        sp::write_trajectory_csv(t.stream(), r.trajectory);
      }
      map = sp::map_permutation(data, est, spec);
      if (!r.converged) fmt::print(std::cerr, "note: EM stopped after {} iterations without converging\n", r.trajectory.size());
      break;
    }
    case sp::Method::ll: {
      sp::LLSpec q{sp::ExchangeableBlocks{a.blocks == 0 ? 1 : a.blocks, a.alpha}};
      if (kind == sp::ModelKind::linear) {
        const auto naive = std::get<sp::LinearParams>(sp::naive_fit(kind, data));
        est = sp::LinearParams{sp::ll_fit_lr(data, q), naive.sigma2};
      } else if (kind == sp::ModelKind::mvn) {
        est = sp::ll_fit_mvn(data, q).params;
      } else {
        throw std::invalid_argument("LL supports the lr and mvn models");
      }
      break;
    }
    case sp::Method::averaging: est = sp::averaging_fit(data, a.bandwidth, kind); break;
    case sp::Method::huber: est = sp::LinearParams{sp::huber_fit_lr(data), 1.0}; break;
    default: throw std::invalid_argument("method '" + a.method + "' is not available in fit");
  }
  Output out(a.out);
  sp::write_params_json(out.stream(), est, map ? &*map : nullptr);
  if (!a.perm.empty() && map) {
    Output p(a.perm);
    sp::write_permutation_csv(p.stream(), *map);
  }
}

// ---- bench --------------------------------------------------------------

struct BenchArgs {
  ModelOptions model;
  std::string family = "sparse";
  std::vector<double> levels;
  std::vector<std::string> methods{"naive", "oracle", "EM", "EMH"};
  std::size_t n = 1000;
  std::size_t blocks = 50;
  std::size_t replications = 20;
  bool full = false;
  std::uint64_t seed = 1;
  std::size_t em_iters = 400;
  std::size_t mcmc_steps = 8000;
  std::size_t burn_in = 4000;
  std::optional<double> gamma;
  std::size_t da_outer = 1000;
  bool timing = false;
  std::size_t threads = 0;
  std::string out = "-";
  std::string summary;
  bool quiet = false;
};

void run_bench(const BenchArgs& a) {
  sp::RunConfig cfg;
  cfg.model = a.model.scenario();
  cfg.family = sp::parse_constraint_family(a.family);
  if (!a.levels.empty())
    cfg.levels = a.levels;
  else if (cfg.family == sp::ConstraintFamily::banded)
    cfg.levels = {3, 4, 5, 6, 7, 8, 9, 10};
  cfg.methods.clear();
  for (const auto& m : a.methods) cfg.methods.push_back(sp::parse_method(m));
  cfg.n = a.n;
  cfg.blocks = a.blocks;
  cfg.replications = a.full ? 100 : a.replications;
  cfg.seed_base = a.seed;
  cfg.em_iterations = a.em_iters;
  cfg.mcmc_steps = a.mcmc_steps;
  cfg.burn_in = a.burn_in;
  cfg.gamma = a.gamma;
  cfg.da_outer = a.da_outer;
  cfg.timing = a.timing;
  cfg.threads = a.threads;
  cfg.validate();

  const sp::GridResult r = sp::run_grid(cfg);
  {
    Output out(a.out);
    sp::write_records_csv(out.stream(), r, cfg.timing);
  }
  if (!a.summary.empty()) {
    Output s(a.summary);
    sp::write_summary_csv(s.stream(), r);
  }
  if (!a.quiet) sp::write_summary_table(std::cerr, r);
}

// ---- theory -------------------------------------------------------------

struct TheoryArgs {
  std::size_t n = 0;
  std::size_t d = 5;
  std::size_t k = 10;
  double snr = 9.0;
  double beta = 1.0;
  double sigma = 1.0;
  double band_sigma = 0.1;
  std::size_t r = 3;
  std::string shape = "sine";
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  std::string out = "-";
};

void run_overfitting(const TheoryArgs& a) {
  const auto rep = sp::demo_overfitting(a.n ? a.n : 10000, a.beta, a.sigma, a.seed);
  Output out(a.out);
  auto& os = out.stream();
  os << "quantity,value,limit\n";
  os << fmt::format("beta_ml,{:.17g},{:.17g}\n", rep.beta_ml, rep.beta_limit);
  os << fmt::format("sigma2_ml,{:.17g},{:.17g}\n", rep.sigma2_ml, rep.sigma2_limit);
  os << fmt::format("fit_gap,{:.17g},{:.17g}\n", rep.fit_gap, rep.gap_limit);
}

void run_sparse_recovery(const TheoryArgs& a) {
  const auto rep = sp::check_sparse_recovery(a.n ? a.n : 500, a.d, a.k, a.snr, a.reps, a.seed);
  Output out(a.out);
  auto& os = out.stream();
  os << fmt::format("# n={} d={} k={} snr={:.17g} gamma={:.17g} l2_bound={:.17g}\n", rep.n, rep.d, rep.k, rep.snr, rep.gamma,
                    rep.l2_bound);
  os << "replication,hamming_to_identity,l2_error,sparsity_holds,l2_holds\n";
  for (std::size_t t = 0; t < rep.reps.size(); ++t) {
    const auto& r = rep.reps[t];
    os << fmt::format("{},{},{:.17g},{},{}\n", t, r.hamming_to_identity, r.l2_error, int(r.sparsity_holds), int(r.l2_holds));
  }
  fmt::print(std::cerr, "sparsity bound held in {:.0f}% and l2 bound in {:.0f}% of {} replications\n",
             100 * rep.sparsity_rate(), 100 * rep.l2_rate(), rep.reps.size());
}

void run_banded_recovery(const TheoryArgs& a) {
  const auto shape = a.shape == "constant" ? sp::SignalShape::constant : sp::SignalShape::sine;
  if (a.shape != "sine" && a.shape != "constant") throw std::invalid_argument("--shape must be sine or constant");
  const auto rep = sp::check_banded_recovery(a.n ? a.n : 200, a.r, a.band_sigma, a.reps, a.seed, shape);
  Output out(a.out);
  auto& os = out.stream();
  os << fmt::format("# n={} r={} sigma={:.17g} gamma={:.17g} threshold={:.17g} probability_bound={:.17g}\n", rep.n, rep.r,
                    rep.sigma, rep.gamma, rep.threshold, rep.probability_bound);
  os << "replication,max_displacement,max_signal_gap,banded,signal_bound_holds\n";
  for (std::size_t t = 0; t < rep.reps.size(); ++t) {
    const auto& r = rep.reps[t];
    os << fmt::format("{},{},{:.17g},{},{}\n", t, r.max_displacement, r.max_signal_gap, int(r.banded),
                      int(r.signal_bound_holds));
  }
  fmt::print(std::cerr, "bandedness held in {:.0f}% of {} replications\n", 100 * rep.banded_rate(), rep.reps.size());
}

void run_tail_bounds(const TheoryArgs& a) {
  const std::size_t nmax = a.n ? a.n : 8;
  Output out(a.out);
  auto& os = out.stream();
  os << "n,k,delta,gamma,tail,bound,holds\n";
  for (std::size_t n = 2; n <= nmax; ++n)
    for (std::size_t k = 2; k <= std::min<std::size_t>(4, n); ++k)
      for (double delta : {0.25, 0.5, 1.0}) {
        const auto rep = sp::verify_hamming_tail_bounds(n, k, delta);
        os << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{}\n", n, k, delta, rep.upper_gamma, rep.upper_tail,
                          rep.upper_bound, int(rep.upper_holds));
      }
}

// ---- da -----------------------------------------------------------------

struct DaArgs {
  std::string data;
  std::string prior = "hamming";
  std::optional<double> gamma;
  std::size_t outer = 1000;
  std::size_t draws = 100;
  std::size_t thin = 40;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string summary;
  bool compare = false;
  std::size_t n = 500;
  double mismatch = 0.4;
  std::size_t replications = 20;
  std::size_t threads = 0;
};

void run_da(const DaArgs& a) {
  if (a.compare) {
    sp::DaComparisonConfig cfg;
    cfg.n = a.n;
    cfg.mismatch = a.mismatch;
    cfg.outer = a.outer;
    cfg.augmentation_draws = a.draws;
    cfg.thinning = a.thin;
    cfg.replications = a.replications;
    cfg.seed = a.seed;
    Output out(a.out);
    sp::write_da_comparison_csv(out.stream(), sp::compare_data_augmentation(cfg));
    return;
  }
  if (a.data.empty()) throw std::invalid_argument("da needs --data (or --compare)");
  const sp::LinkedDataset data = sp::read_dataset_csv(a.data);
  data.validate();
  sp::DaConfig cfg;
  cfg.outer_iterations = a.outer;
  cfg.augmentation_draws = a.draws;
  cfg.thinning = a.thin;
  cfg.seed = a.seed;
  cfg.prior = make_prior(a.prior, a.gamma, data.n(), 1, {});
  const sp::DaResult r = sp::run_data_augmentation(data, cfg);
  {
    Output out(a.out);
    sp::write_draws_csv(out.stream(), r);
  }
  if (!a.summary.empty()) {
    Output s(a.summary);
    sp::write_summary_json(s.stream(), r);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation from shuffled data with permutation priors"};
  app.set_config("--config", "", "INI file with option values (sections name subcommands)");
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default: SHUFFLEPRIOR_THREADS or all cores)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a shuffled synthetic data set");
  sim.model.add(simulate);
  simulate->add_option("--family", sim.family, "sparse, banded or sparse_block")->capture_default_str();
  simulate->add_option("--level", sim.level, "mismatch rate, or bandwidth for banded")->capture_default_str();
  simulate->add_option("--n", sim.n)->capture_default_str();
  simulate->add_option("--blocks", sim.blocks)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--out", sim.out, "data set CSV")->capture_default_str();
  simulate->add_option("--truth", sim.truth, "true parameters and permutation as JSON");
  simulate->add_option("--perm", sim.perm, "true permutation as CSV");

  FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "fit one method to a data set");
  fitcmd->add_option("--data", fit.data, "data set CSV")->required()->check(CLI::ExistingFile);
  fitcmd->add_option("--model", fit.model, "lr, poisson or mvn")->capture_default_str();
  fitcmd->add_option("--method", fit.method, "naive, EM, EMH, EML, EMB, LL, averaging or huber")->capture_default_str();
  fitcmd->add_option("--prior", fit.prior, "uniform, hamming, banded or block (method EM)")->capture_default_str();
  fitcmd->add_option("--gamma", fit.gamma, "prior concentration");
  fitcmd->add_option("--bandwidth", fit.bandwidth, "band for the banded prior and the averaging window")->capture_default_str();
  fitcmd->add_option("--blocks", fit.blocks, "number of contiguous blocks");
  fitcmd->add_option("--block-ids", fit.block_ids, "file with one block label per row")->check(CLI::ExistingFile);
  fitcmd->add_option("--alpha", fit.alpha, "within-block mismatch rate (LL)")->capture_default_str();
  fitcmd->add_option("--em-iters", fit.em_iters)->capture_default_str();
  fitcmd->add_option("--mcmc-steps", fit.mcmc_steps)->capture_default_str();
  fitcmd->add_option("--burn-in", fit.burn_in)->capture_default_str();
  fitcmd->add_option("--seed", fit.seed)->capture_default_str();
  fitcmd->add_option("--out", fit.out, "parameter JSON")->capture_default_str();
  fitcmd->add_option("--trajectory", fit.trajectory, "EM trajectory CSV");
  fitcmd->add_option("--perm", fit.perm, "MAP permutation CSV");

  BenchArgs bench;
  auto* benchcmd = app.add_subcommand("bench", "run an experiment grid");
  bench.model.add(benchcmd);
  benchcmd->add_option("--family", bench.family, "sparse, banded or sparse_block")->capture_default_str();
  benchcmd->add_option("--levels", bench.levels, "mismatch rates or bandwidths")->delimiter(',');
  benchcmd->add_option("--methods", bench.methods)->delimiter(',')->capture_default_str();
  benchcmd->add_option("--n", bench.n)->capture_default_str();
  benchcmd->add_option("--blocks", bench.blocks)->capture_default_str();
  benchcmd->add_option("--replications", bench.replications)->capture_default_str();
  benchcmd->add_flag("--full", bench.full, "100 replications per cell");
  benchcmd->add_option("--seed", bench.seed)->capture_default_str();
  benchcmd->add_option("--em-iters", bench.em_iters)->capture_default_str();
  benchcmd->add_option("--mcmc-steps", bench.mcmc_steps)->capture_default_str();
  benchcmd->add_option("--burn-in", bench.burn_in)->capture_default_str();
  benchcmd->add_option("--gamma", bench.gamma);
  benchcmd->add_option("--da-outer", bench.da_outer)->capture_default_str();
  benchcmd->add_flag("--timing", bench.timing, "add wall-clock seconds to the records");
  benchcmd->add_option("--out", bench.out, "per-run records CSV")->capture_default_str();
  benchcmd->add_option("--summary", bench.summary, "summary CSV");
  benchcmd->add_flag("--quiet", bench.quiet, "do not print the summary table");

  TheoryArgs th;
  auto* theory = app.add_subcommand("theory", "numerical checks of the theory");
  theory->require_subcommand(1);
  auto* overfit = theory->add_subcommand("overfitting", "least squares with order-statistic matching");
  overfit->add_option("--n", th.n, "sample size (default 10000)");
  overfit->add_option("--beta", th.beta)->capture_default_str();
  overfit->add_option("--sigma", th.sigma)->capture_default_str();
  auto* sparse_rec = theory->add_subcommand("sparse-recovery", "sparse MAP recovery");
  sparse_rec->add_option("--n", th.n, "sample size (default 500)");
  sparse_rec->add_option("--dim", th.d)->capture_default_str();
  sparse_rec->add_option("--k", th.k)->capture_default_str();
  sparse_rec->add_option("--snr", th.snr)->capture_default_str();
  auto* banded_rec = theory->add_subcommand("banded-recovery", "banded MAP recovery");
  banded_rec->add_option("--n", th.n, "sample size (default 200)");
  banded_rec->add_option("--r", th.r)->capture_default_str();
  banded_rec->add_option("--sigma", th.band_sigma)->capture_default_str();
  banded_rec->add_option("--shape", th.shape, "sine or constant")->capture_default_str();
  auto* tail_bounds = theory->add_subcommand("tail-bounds", "exact Hamming prior tail bounds");
  tail_bounds->add_option("--n", th.n, "largest n (default 8)");
  for (auto* sub : {overfit, sparse_rec, banded_rec}) {
    sub->add_option("--seed", th.seed)->capture_default_str();
    sub->add_option("--out", th.out)->capture_default_str();
  }
  for (auto* sub : {sparse_rec, banded_rec}) sub->add_option("--reps", th.reps)->capture_default_str();
  tail_bounds->add_option("--out", th.out)->capture_default_str();

  DaArgs da;
  auto* dacmd = app.add_subcommand("da", "Bayesian data augmentation for linear regression");
  dacmd->add_option("--data", da.data, "data set CSV (include an intercept column if wanted)");
  dacmd->add_option("--prior", da.prior, "uniform or hamming")->capture_default_str();
  dacmd->add_option("--gamma", da.gamma, "default log n");
  dacmd->add_option("--outer", da.outer)->capture_default_str();
  dacmd->add_option("--draws", da.draws, "permutations per augmentation step")->capture_default_str();
  dacmd->add_option("--thin", da.thin)->capture_default_str();
  dacmd->add_option("--seed", da.seed)->capture_default_str();
  dacmd->add_option("--out", da.out, "posterior draws CSV")->capture_default_str();
  dacmd->add_option("--summary", da.summary, "summary JSON");
  dacmd->add_flag("--compare", da.compare, "simulate and compare the Hamming and uniform priors");
  dacmd->add_option("--n", da.n, "sample size for --compare")->capture_default_str();
  dacmd->add_option("--mismatch", da.mismatch, "mismatch rate for --compare")->capture_default_str();
  dacmd->add_option("--replications", da.replications, "replications for --compare")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) setenv("SHUFFLEPRIOR_THREADS", std::to_string(threads).c_str(), 1);
    bench.threads = threads;
    if (simulate->parsed()) run_simulate(sim);
    if (fitcmd->parsed()) run_fit(fit);
    if (benchcmd->parsed()) run_bench(bench);
    if (overfit->parsed()) run_overfitting(th);
    if (sparse_rec->parsed()) run_sparse_recovery(th);
    if (banded_rec->parsed()) run_banded_recovery(th);
    if (tail_bounds->parsed()) run_tail_bounds(th);
    if (dacmd->parsed()) run_da(da);
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
