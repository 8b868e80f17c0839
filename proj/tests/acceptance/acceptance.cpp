// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if any fails.
//
//   acceptance --cli <path to shuffleprior> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "oracles.hpp"
#include "shuffleprior/bayes.hpp"
#include "shuffleprior/experiments.hpp"
#include "shuffleprior/lap.hpp"
#include "shuffleprior/mcmc.hpp"
#include "shuffleprior/models.hpp"
#include "shuffleprior/priors.hpp"

namespace sp = shuffleprior;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_cli;

Eigen::Index ix(std::size_t k) { return static_cast<Eigen::Index>(k); }

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, sp::Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

// 1 -------------------------------------------------------------------------
Outcome overfitting_limits() {
  const auto r = sp::demo_overfitting(10000, 1.0, 1.0, 11);
  const double beta_rel = std::abs(r.beta_ml - std::sqrt(2.0)) / std::sqrt(2.0);
  const double gap_rel = std::abs(r.fit_gap - 1.0);
  return {beta_rel < 0.02 && r.sigma2_ml < 0.05 && gap_rel < 0.10,
          fmt::format("beta_ml={:.4f} (rel {:.4f}), sigma2_ml={:.5f}, fit gap={:.4f}", r.beta_ml, beta_rel, r.sigma2_ml,
                      r.fit_gap)};
}

// 2 -------------------------------------------------------------------------
Outcome prior_machinery() {
  double worst = 0.0;
  for (std::size_t n = 1; n <= 7; ++n)
    for (double g : {0.0, 0.5, 1.0, 2.0, 5.0}) {
      const double ref = oracle::hamming_normalizer(n, g);
      worst = std::max(worst, std::abs(sp::hamming_normalizer(n, g) - ref) / ref);
      for (std::size_t k = 2; k <= n; ++k) {
        const double t = oracle::hamming_tail(n, g, k);
        worst = std::max(worst, std::abs(sp::hamming_tail(n, g, k) - t) / t);
      }
    }
  return {worst < 1e-10, fmt::format("max relative error {:.3e}", worst)};
}

// 3 -------------------------------------------------------------------------
Outcome tail_upper_bound() {
  std::size_t checked = 0, held = 0;
  for (std::size_t n = 2; n <= 8; ++n)
    for (std::size_t k : {2u, 3u, 4u}) {
      if (k > n) continue;
      for (double delta : {0.25, 0.5, 1.0}) {
        const double gamma = (1.0 + delta) * std::log(static_cast<double>(n));
        const double tail = oracle::hamming_tail(n, gamma, k);
        const double bound = std::exp(-static_cast<double>(k) * delta * std::log(static_cast<double>(n)));
        const auto rep = sp::verify_hamming_tail_bounds(n, k, delta);
        ++checked;
        if (tail <= bound && rep.upper_holds) ++held;
      }
    }
  return {held == checked, fmt::format("{}/{} (n, k, delta) cases hold", held, checked)};
}

// 4 -------------------------------------------------------------------------
Outcome lap_correctness() {
  sp::Rng rng(4);
  std::uniform_int_distribution<int> cost(0, 100);
  std::size_t mismatches = 0;
  double worst_dual = 0.0;
  for (std::size_t n = 4; n <= 8; ++n)
    for (int t = 0; t < 200; ++t) {
      Eigen::MatrixXd c(ix(n), ix(n));
      for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = cost(rng);
      const sp::CostMatrix cm(c);
      const auto a = sp::solve_exact(cm);
      const auto ref = oracle::brute_lap(c);
      if (a.objective != ref.objective) ++mismatches;
      worst_dual = std::min(worst_dual, sp::dual_certificate(cm, a).min_reduced_cost);
    }
  return {mismatches == 0 && worst_dual >= -1e-9,
          fmt::format("{} objective mismatches in 1000 problems, min reduced cost {:.2e}", mismatches, worst_dual)};
}

// 5 -------------------------------------------------------------------------
double chain_tv(const sp::LinkedDataset& data, const sp::ModelParams& theta, const sp::PriorSpec& prior,
                sp::ChainConfig cfg, const std::function<bool(const oracle::Perm&)>& admissible, int variant,
                std::size_t r, const std::vector<std::size_t>& blocks) {
  const std::size_t n = data.n();
  const auto& lin = std::get<sp::LinearParams>(theta);
  auto lik = [&](std::size_t i, std::size_t j) {
    return oracle::gaussian_logpdf(data.y(ix(i), 0), data.x.row(ix(j)).dot(lin.beta), lin.sigma2);
  };
  auto weight = [&](std::size_t i, std::size_t j) { return prior.log_weight(i, j); };
  const auto exact = oracle::enumerated_posterior(n, lik, weight, admissible);

  std::vector<double> counts(exact.size(), 0.0);
  std::size_t total = 0;
  cfg.on_retained = [&](std::size_t, std::span<const std::size_t> t) {
    counts[oracle::lex_rank(oracle::Perm(t.begin(), t.end()))] += 1.0;
    ++total;
  };
  if (variant == 0) sp::run_chain(data, theta, prior, cfg);
  if (variant == 1) sp::run_chain_local(data, theta, prior, cfg, r);
  if (variant == 2) sp::run_chain_block(data, theta, prior, cfg, blocks);
  double tv = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) tv += std::abs(counts[k] / static_cast<double>(total) - exact[k]);
  return 0.5 * tv;
}

Outcome sampler_exactness() {
  sp::ChainConfig cfg;
  cfg.steps = 200000;
  cfg.burn_in = 10000;
  cfg.seed = 5;

  auto make = [](std::size_t n, std::uint64_t seed) {
    sp::Rng rng(seed);
    sp::LinkedDataset d{gaussian_matrix(ix(n), 1, rng), Eigen::MatrixXd(ix(n), 1)};
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) d.y(ix(i), 0) = d.x(ix(i), 0) + nd(rng);
    return d;
  };
  const sp::ModelParams theta = sp::LinearParams{Eigen::VectorXd::Ones(1), 1.0};

  const auto d5 = make(5, 51);
  const double tv_uniform = chain_tv(d5, theta, sp::PriorSpec::uniform(), cfg, {}, 0, 0, {});
  const double tv_hamming = chain_tv(d5, theta, sp::PriorSpec::hamming(0.5), cfg, {}, 0, 0, {});

  const auto d6 = make(6, 52);
  const auto blocks = sp::contiguous_blocks(6, 2);
  const double tv_block = chain_tv(
      d6, theta, sp::PriorSpec(0.5, sp::BlockMode{blocks, true}), cfg,
      [&](const oracle::Perm& p) {
        for (std::size_t i = 0; i < p.size(); ++i)
          if (blocks[i] != blocks[p[i]]) return false;
        return true;
      },
      2, 0, blocks);

  const auto d4 = make(4, 53);
  const double tv_local = chain_tv(
      d4, theta, sp::PriorSpec(1.0, sp::BandedMode{1, {}}), cfg,
      [](const oracle::Perm& p) {
        for (std::size_t i = 0; i < p.size(); ++i)
          if ((p[i] > i ? p[i] - i : i - p[i]) > 1) return false;
        return true;
      },
      1, 1, {});

  const double worst = std::max({tv_uniform, tv_hamming, tv_block, tv_local});
  return {worst < 0.05, fmt::format("TV uniform={:.4f} hamming={:.4f} block={:.4f} local={:.4f}", tv_uniform, tv_hamming,
                                    tv_block, tv_local)};
}

// 6 -------------------------------------------------------------------------
Eigen::MatrixXd average_of_permutations(std::size_t n, std::size_t count, sp::Rng& rng) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(ix(n), ix(n));
  std::vector<std::size_t> p(n);
  for (std::size_t c = 0; c < count; ++c) {
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    for (std::size_t i = 0; i < n; ++i) e(ix(i), ix(p[i])) += 1.0 / static_cast<double>(count);
  }
  return e;
}

Outcome mstep_equivalence() {
  const std::size_t n = 30;
  sp::Rng rng(6);
  const Eigen::MatrixXd e = average_of_permutations(n, 50, rng);
  std::normal_distribution<double> nd(0.0, 1.0);
  double param_err = 0.0, const_spread = 0.0;

  auto spread_of = [](const std::vector<double>& diffs) {
    const auto [lo, hi] = std::minmax_element(diffs.begin(), diffs.end());
    return *hi - *lo;
  };

  {  // LR
    sp::LinkedDataset data{gaussian_matrix(ix(n), 3, rng), Eigen::MatrixXd(ix(n), 1)};
    for (std::size_t i = 0; i < n; ++i) data.y(ix(i), 0) = data.x.row(ix(i)).sum() + nd(rng);
    const sp::ReducedStats stats{e.transpose() * data.y, 50};
    const auto fit = std::get<sp::LinearParams>(sp::mstep(sp::ModelKind::linear, data, stats));
    const auto ref = oracle::n2_minimizer_lr(data.x, data.y.col(0), e);
    param_err = std::max({param_err, (fit.beta - ref.beta).lpNorm<Eigen::Infinity>(), std::abs(fit.sigma2 - ref.sigma2)});
    std::vector<double> diffs;
    for (int t = 0; t < 5; ++t) {
      sp::LinearParams th{fit.beta + 0.3 * t * Eigen::VectorXd::Ones(3), fit.sigma2 * (1.0 + 0.2 * t)};
      diffs.push_back(sp::reduced_objective(data, th, stats) - oracle::n2_objective_lr(data.x, data.y.col(0), e, th.beta, th.sigma2));
    }
    const_spread = std::max(const_spread, spread_of(diffs));
  }
  {  // Poisson
    sp::LinkedDataset data{0.5 * gaussian_matrix(ix(n), 2, rng), Eigen::MatrixXd(ix(n), 1)};
    for (std::size_t i = 0; i < n; ++i)
      data.y(ix(i), 0) =
          static_cast<double>(std::poisson_distribution<int>(std::exp(0.5 + data.x.row(ix(i)).sum()))(rng));
    const sp::ReducedStats stats{e.transpose() * data.y, 50};
    const auto fit = std::get<sp::PoissonParams>(sp::mstep(sp::ModelKind::poisson, data, stats));
    const auto ref = oracle::n2_minimizer_poisson(data.x, data.y.col(0), e);
    param_err = std::max({param_err, (fit.beta - ref.beta).lpNorm<Eigen::Infinity>(), std::abs(fit.intercept - ref.intercept)});
    std::vector<double> diffs;
    for (int t = 0; t < 5; ++t) {
      sp::PoissonParams th{fit.beta + 0.2 * t * Eigen::VectorXd::Ones(2), fit.intercept - 0.1 * t};
      diffs.push_back(sp::reduced_objective(data, th, stats) -
                      oracle::n2_objective_poisson(data.x, data.y.col(0), e, th.beta, th.intercept));
    }
    const_spread = std::max(const_spread, spread_of(diffs));
  }
  {  // MVN
    Eigen::MatrixXd z = gaussian_matrix(ix(n), 4, rng);
    z.col(2) += z.col(0);
    z.col(3) += 0.5 * z.col(1);
    sp::LinkedDataset data{z.leftCols(2), z.rightCols(2)};
    const sp::ReducedStats stats{e.transpose() * data.y, 50};
    const auto fit = std::get<sp::MvnParams>(sp::mstep(sp::ModelKind::mvn, data, stats));
    const auto ref = oracle::n2_minimizer_mvn(data.x, data.y, e);
    param_err = std::max({param_err, (fit.mean - ref.mean).lpNorm<Eigen::Infinity>(),
                          (fit.precision - ref.precision).lpNorm<Eigen::Infinity>()});
    std::vector<double> diffs;
    for (int t = 0; t < 5; ++t) {
      sp::MvnParams th{fit.mean.array() + 0.1 * t, fit.precision + 0.2 * t * Eigen::MatrixXd::Identity(4, 4)};
      diffs.push_back(sp::reduced_objective(data, th, stats) -
                      oracle::n2_objective_mvn(data.x, data.y, e, th.mean, th.precision));
    }
    const_spread = std::max(const_spread, spread_of(diffs));
  }
  return {param_err < 1e-6 && const_spread < 1e-8,
          fmt::format("max parameter difference {:.2e}, objective offset spread {:.2e}", param_err, const_spread)};
}

// 7, 8 ----------------------------------------------------------------------
double gap_in_se(const sp::SummaryRow& lo, const sp::SummaryRow& hi) {
  return (hi.mean_ree - lo.mean_ree) / std::sqrt(lo.se * lo.se + hi.se * hi.se);
}

Outcome em_improvement() {
  sp::RunConfig cfg;
  cfg.family = sp::ConstraintFamily::sparse;
  cfg.levels = {0.3};
  cfg.methods = {sp::Method::naive, sp::Method::em, sp::Method::emh};
  cfg.gamma = std::log(1000.0);
  const auto grid = sp::run_grid(cfg);
  const auto* naive = grid.find(0.3, sp::Method::naive);
  const auto* em = grid.find(0.3, sp::Method::em);
  const auto* emh = grid.find(0.3, sp::Method::emh);
  const double g1 = gap_in_se(*emh, *naive), g2 = gap_in_se(*emh, *em);
  return {emh->count == 20 && naive->count == 20 && em->count == 20 && g1 >= 3.0 && g2 >= 3.0,
          fmt::format("REE naive={:.4f}+-{:.4f} EM={:.4f}+-{:.4f} EMH={:.4f}+-{:.4f}; gaps {:.1f} and {:.1f} SE",
                      naive->mean_ree, naive->se, em->mean_ree, em->se, emh->mean_ree, emh->se, g1, g2)};
}

Outcome banded_mvn_ordering() {
  sp::RunConfig cfg;
  // weak cross-correlation; with rho = 0.8 the uniform-prior fit inflates
  // correlations toward the truth and beats the naive fit
  cfg.model = sp::MvnScenario{5, 5, 1.0, 0.3};
  cfg.family = sp::ConstraintFamily::banded;
  cfg.levels = {5};
  cfg.methods = {sp::Method::naive, sp::Method::em, sp::Method::eml};
  const auto grid = sp::run_grid(cfg);
  const auto* naive = grid.find(5, sp::Method::naive);
  const auto* em = grid.find(5, sp::Method::em);
  const auto* eml = grid.find(5, sp::Method::eml);
  const double g1 = gap_in_se(*eml, *naive), g2 = gap_in_se(*naive, *em);
  return {eml->count == 20 && naive->count == 20 && em->count == 20 && g1 >= 3.0 && g2 >= 3.0,
          fmt::format("Corr error EML={:.4f}+-{:.4f} naive={:.4f}+-{:.4f} EM={:.4f}+-{:.4f}; gaps {:.1f} and {:.1f} SE",
                      eml->mean_ree, eml->se, naive->mean_ree, naive->se, em->mean_ree, em->se, g1, g2)};
}

// 9 -------------------------------------------------------------------------
Outcome theory_empirical() {
  const auto t1 = sp::check_sparse_recovery(500, 5, 10, 9.0, 50, 9);
  const auto p2 = sp::check_banded_recovery(200, 3, 0.1, 50, 90);
  return {t1.sparsity_rate() >= 0.9 && p2.banded_rate() >= 0.9,
          fmt::format("sparse MAP support {:.0f}% (l2 {:.0f}%), banded MAP displacement {:.0f}%", 100 * t1.sparsity_rate(),
                      100 * t1.l2_rate(), 100 * p2.banded_rate())};
}

// 10 ------------------------------------------------------------------------
Outcome data_augmentation() {
  sp::DaComparisonConfig cfg;
  cfg.seed = 10;
  const auto rows = sp::compare_data_augmentation(cfg);
  std::size_t closer = 0, absorbed = 0;
  double uniform_s2 = 0.0, oracle_s2 = 0.0;
  for (const auto& r : rows) {
    if (std::abs(r.hamming_slope - r.oracle_slope) < std::abs(r.uniform_slope - r.oracle_slope)) ++closer;
    if (r.uniform_sigma2 < 0.5 * r.oracle_sigma2) ++absorbed;
    uniform_s2 += r.uniform_sigma2 / static_cast<double>(rows.size());
    oracle_s2 += r.oracle_sigma2 / static_cast<double>(rows.size());
  }
  const double frac = static_cast<double>(closer) / static_cast<double>(rows.size());
  return {frac >= 0.8 && uniform_s2 < 0.5 * oracle_s2,
          fmt::format("Hamming slope closer in {}/{}; uniform sigma2 mean {:.3f} vs oracle {:.3f} "
                      "({} replications below half the oracle)",
                      closer, rows.size(), uniform_s2, oracle_s2, absorbed)};
}

// 11 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome determinism() {
  if (g_cli.empty()) return {false, "no --cli given"};
  const fs::path dir = fs::temp_directory_path() / fmt::format("shuffleprior_accept_{}", ::getpid());
  fs::create_directories(dir);
  const std::string data = (dir / "data.csv").string();
  const std::string lr1 = (dir / "lr1.csv").string();
  {
    const std::string cmd = fmt::format("\"{}\" simulate --n 60 --dim 2 --level 0.3 --seed 3 --out \"{}\"", g_cli, data);
    const std::string cmd2 =
        fmt::format("\"{}\" simulate --n 60 --dim 2 --level 0.3 --seed 4 --out \"{}\"", g_cli, lr1);
    if (std::system(cmd.c_str()) != 0 || std::system(cmd2.c_str()) != 0) return {false, "simulate failed"};
  }
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate --model mvn --family banded --level 3 --n 100 --seed 5"},
      {"fit", fmt::format("fit --data \"{}\" --method EMH --em-iters 5 --mcmc-steps 400 --burn-in 200 --seed 2", data)},
      {"fit-trajectory",
       fmt::format("fit --data \"{}\" --method EM --prior uniform --em-iters 3 --mcmc-steps 400 --burn-in 200 --seed 2 "
                   "--out - --trajectory",
                   data)},
      {"bench", "bench --n 100 --dim 3 --levels 0.2,0.3 --methods naive,oracle,EM,EMH --replications 3 "
                "--em-iters 5 --mcmc-steps 500 --burn-in 250 --threads 2 --quiet --seed 4"},
      {"theory-overfitting", "theory overfitting --n 2000 --seed 3"},
      {"theory-sparse-recovery", "theory sparse-recovery --n 120 --reps 4 --seed 3"},
      {"theory-banded-recovery", "theory banded-recovery --n 80 --reps 4 --seed 3"},
      {"theory-tail-bounds", "theory tail-bounds --n 6"},
      {"da", fmt::format("da --data \"{}\" --outer 30 --draws 10 --thin 5 --seed 9", lr1)},
      {"da-compare", "da --compare --n 60 --replications 2 --outer 20 --draws 5 --thin 5 --seed 9"},
  };
  std::vector<std::string> differing;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / fmt::format("{}_{}.csv", name, run);
      std::string cmdline = fmt::format("\"{}\" {}", g_cli, args);
      if (name == "fit-trajectory")
        cmdline += fmt::format(" \"{}\" > /dev/null", out.string());
      else
        cmdline += fmt::format(" > \"{}\" 2> /dev/null", out.string());
      if (std::system(cmdline.c_str()) != 0) {
        differing.push_back(name + " (failed)");
        break;
      }
      outputs[run] = slurp(out);
    }
    if (outputs[0].empty() || outputs[0] != outputs[1]) differing.push_back(name);
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (!differing.empty()) {
    std::string list;
    for (const auto& d : differing) list += " " + d;
    return {false, "outputs differ:" + list};
  }
  return {true, fmt::format("{} commands byte-identical across two runs", commands.size())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--cli" && a + 1 < argc) {
      g_cli = argv[++a];
    } else {
      selected.push_back(std::atoi(arg.c_str()));
    }
  }

  const std::vector<Criterion> criteria{
      {1, "overfitting limits", 1.0, overfitting_limits},
      {2, "Hamming normalizer and tail", 10.0, prior_machinery},
      {3, "Hamming tail upper bound", 10.0, tail_upper_bound},
      {4, "assignment solver", 30.0, lap_correctness},
      {5, "sampler exactness", 60.0, sampler_exactness},
      {6, "reduced M-step", 10.0, mstep_equivalence},
      {7, "EM with Hamming prior", 1200.0, em_improvement},
      {8, "banded MVN ordering", 1200.0, banded_mvn_ordering},
      {9, "MAP recovery guarantees", 300.0, theory_empirical},
      {10, "data augmentation", 900.0, data_augmentation},
      {11, "determinism", 600.0, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::cout << fmt::format("{} criterion {:2d} ({}): {} [{:.2f} s{}]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                             o.detail, secs, in_time ? "" : fmt::format(", over the {:.0f} s budget", c.budget_seconds));
    std::cout.flush();
  }
  return failures == 0 ? 0 : 1;
}
