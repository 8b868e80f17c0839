#include "shuffleprior/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "shuffleprior/lap.hpp"

namespace shuffleprior {

namespace {

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

std::vector<std::vector<std::size_t>> group_blocks(const std::vector<std::size_t>& block_of) {
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < block_of.size(); ++i) by_label[block_of[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(by_label.size());
  for (auto& [label, members] : by_label) out.push_back(std::move(members));
  return out;
}

// Sum of Pi^T Y over retained states, with rows flushed only when they change.
class LazyAccumulator {
 public:
  LazyAccumulator(const Eigen::MatrixXd& y, std::span<const std::size_t> targets)
      : y_(y), sum_(Eigen::MatrixXd::Zero(y.rows(), y.cols())), inv_(targets.size()), last_(targets.size(), 0) {
    for (std::size_t i = 0; i < targets.size(); ++i) inv_[targets[i]] = i;
  }

  // x-row `row` is about to change partner
  void flush(std::size_t row) {
    const std::size_t w = count_ - last_[row];
    if (w) sum_.row(idx(row)) += static_cast<double>(w) * y_.row(idx(inv_[row]));
    last_[row] = count_;
  }
  void flush_all() {
    for (std::size_t row = 0; row < inv_.size(); ++row) flush(row);
  }
  void swapped(std::size_t row_a, std::size_t row_b) { std::swap(inv_[row_a], inv_[row_b]); }
  void retain() { ++count_; }
  std::size_t count() const noexcept { return count_; }
  const Eigen::MatrixXd& sum() const noexcept { return sum_; }

 private:
  const Eigen::MatrixXd& y_;
  Eigen::MatrixXd sum_;
  std::vector<std::size_t> inv_;   // x-row -> response index
  std::vector<std::size_t> last_;  // retained count at the last flush
  std::size_t count_ = 0;
};

Permutation initial_state(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                          const ChainConfig& cfg) {
  switch (cfg.init) {
    case ChainInit::map: return map_permutation(data, theta, prior);
    case ChainInit::warm_start:
      if (!cfg.warm_start) throw std::invalid_argument("run_chain: warm start requested without a permutation");
      return *cfg.warm_start;
    default: return Permutation::identity(data.n());
  }
}

bool respects_scheme(const ProposalScheme& scheme, std::span<const std::size_t> t) {
  if (const auto* loc = std::get_if<LocalSwap>(&scheme)) return max_displacement(t) <= loc->r;
  if (const auto* blk = std::get_if<BlockSwap>(&scheme)) {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (blk->block_of[i] != blk->block_of[t[i]]) return false;
  }
  return true;
}

}  // namespace

void ChainConfig::validate() const {
  if (burn_in >= steps) throw std::invalid_argument("ChainConfig: burn-in must be smaller than the step count");
  if (const auto* loc = std::get_if<LocalSwap>(&scheme); loc && loc->r < 1)
    throw std::invalid_argument("ChainConfig: local bandwidth must be at least 1");
}

double log_posterior_unnormalized(const PairLikelihood& lik, const PriorSpec& prior, const Permutation& p) {
  const double lp = log_prior_unnormalized(prior, p);
  if (lp == kNegInf) return kNegInf;
  return lik.total(p) + lp;
}

double swap_log_ratio(const PairLikelihood& lik, const PriorSpec& prior, std::span<const std::size_t> t,
                      std::size_t i, std::size_t j) {
  if (i == j) return 0.0;
  const std::size_t a = t[i], b = t[j];
  double prior_delta = 0.0;
  if (!prior.is_uniform()) {
    const double wi = prior.log_weight(i, b), wj = prior.log_weight(j, a);
    if (wi == kNegInf || wj == kNegInf) return kNegInf;
    prior_delta = wi + wj - prior.log_weight(i, a) - prior.log_weight(j, b);
  }
  return lik(i, b) + lik(j, a) - lik(i, a) - lik(j, b) + prior_delta;
}

ChainResult run_chain(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                      const ChainConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.n();
  if (prior.fixed_size() != 0 && prior.fixed_size() != n)
    throw std::invalid_argument("run_chain: prior size differs from the data size");
  if (const auto* blk = std::get_if<BlockSwap>(&cfg.scheme); blk && blk->block_of.size() != n)
    throw std::invalid_argument("run_chain: block labels do not cover the data");

  const PairLikelihood lik(data, theta);
  const Permutation init = initial_state(data, theta, prior, cfg);
  if (init.size() != n) throw std::invalid_argument("run_chain: initial permutation has the wrong size");
  const double lp0 = log_prior_unnormalized(prior, init);
  if (lp0 == kNegInf) throw std::invalid_argument("run_chain: initial permutation is excluded by the prior");
  if (!respects_scheme(cfg.scheme, init.targets()))
    throw std::invalid_argument("run_chain: initial permutation violates the proposal constraint");

  std::vector<std::size_t> t(init.targets().begin(), init.targets().end());
  LazyAccumulator acc(data.y, t);
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::vector<std::size_t>> blocks;
  if (const auto* blk = std::get_if<BlockSwap>(&cfg.scheme)) {
    blocks = group_blocks(blk->block_of);
  }
  const LocalSwap* local = std::get_if<LocalSwap>(&cfg.scheme);

  double log_post = lik.total(init) + lp0;
  std::size_t displaced = displaced_count(t);
  std::size_t accepted = 0, invalid = 0;
  ChainResult out{ReducedStats{}, init, 0.0, 0, 0, {}};

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    std::size_t i = 0, j = 0;
    bool valid = true;
    if (local) {
      i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      const std::size_t lo = i >= local->r ? i - local->r : 0;
      const std::size_t hi = std::min(i + local->r, n - 1);
      j = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
      valid = abs_diff(t[j], i) <= local->r && abs_diff(t[i], j) <= local->r;
    } else if (!blocks.empty()) {
      const auto& members = blocks[std::uniform_int_distribution<std::size_t>(0, blocks.size() - 1)(rng)];
      if (members.size() >= 2) {
        const std::size_t a = std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng);
        std::size_t b = std::uniform_int_distribution<std::size_t>(0, members.size() - 2)(rng);
        if (b >= a) ++b;
        i = members[a];
        j = members[b];
      } else {
        i = j = members.front();
      }
    } else if (n >= 2) {
      i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      j = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
      if (j >= i) ++j;
    }

    if (!valid) {
      ++invalid;
    } else if (i == j) {
      ++accepted;
    } else {
      const double delta = swap_log_ratio(lik, prior, t, i, j);
      if (delta >= 0.0 || (delta != kNegInf && std::log(unif(rng)) < delta)) {
        const std::size_t a = t[i], b = t[j];
        acc.flush(a);
        acc.flush(b);
        acc.swapped(a, b);
        displaced -= (a != i) + (b != j);
        std::swap(t[i], t[j]);
        displaced += (t[i] != i) + (t[j] != j);
        log_post += delta;
        ++accepted;
      }
    }

    if (step > cfg.burn_in) {
      acc.retain();
      if (cfg.check_states && !respects_scheme(cfg.scheme, t))
        throw std::logic_error("run_chain: retained state violates the proposal constraint");
      if (cfg.on_retained) cfg.on_retained(step, t);
      if (cfg.trace_every && (acc.count() % cfg.trace_every) == 0)
        out.trace.push_back(TracePoint{step, displaced, log_post});
    }
    if (cfg.refresh_every && step % cfg.refresh_every == 0) acc.flush_all();
  }
  acc.flush_all();

  out.retained = acc.count();
  out.stats = ReducedStats{acc.sum() / static_cast<double>(out.retained), out.retained};
  out.last_state = Permutation(std::move(t));
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.steps);
  out.invalid_steps = invalid;
  return out;
}

ChainResult run_chain_local(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                            ChainConfig cfg, std::size_t r) {
  cfg.scheme = LocalSwap{r};
  return run_chain(data, theta, prior, cfg);
}

ChainResult run_chain_block(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                            ChainConfig cfg, std::vector<std::size_t> block_of) {
  cfg.scheme = BlockSwap{std::move(block_of)};
  return run_chain(data, theta, prior, cfg);
}

Permutation map_permutation(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior) {
  const std::size_t n = data.n();
  const PairLikelihood lik(data, theta);
  Eigen::MatrixXd m = lik.matrix();
  if (!prior.is_uniform()) m += prior.gamma() * prior.dense_mode(n);
  BoolMatrix mask;
  if (!prior.is_uniform()) {
    mask = prior.forbidden_mask(n);
    if (!mask.any()) mask.resize(0, 0);
  }
  return mode_of_prior(m, mask);
}

ReducedStats exact_posterior_stats(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                                   const std::function<bool(std::span<const std::size_t>)>& admissible) {
  const std::size_t n = data.n();
  if (n > 9) throw std::invalid_argument("exact_posterior_stats: enumeration limited to n <= 9");
  const PairLikelihood lik(data, theta);
  std::vector<std::size_t> t(n);
  std::iota(t.begin(), t.end(), std::size_t{0});

  std::vector<double> logw;
  std::vector<std::vector<std::size_t>> states;
  do {
    if (admissible && !admissible(t)) continue;
    const double lp = log_posterior_unnormalized(lik, prior, Permutation(t));
    if (lp == kNegInf) continue;
    logw.push_back(lp);
    states.push_back(t);
  } while (std::next_permutation(t.begin(), t.end()));
  if (states.empty()) throw std::invalid_argument("exact_posterior_stats: no admissible permutation");

  const double top = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  Eigen::MatrixXd pty = Eigen::MatrixXd::Zero(data.y.rows(), data.y.cols());
  for (std::size_t s = 0; s < states.size(); ++s) {
    const double w = std::exp(logw[s] - top);
    z += w;
    for (std::size_t i = 0; i < n; ++i) pty.row(idx(states[s][i])) += w * data.y.row(idx(i));
  }
  return ReducedStats{pty / z, states.size()};
}

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace) {
  os << "step,hamming_to_identity,log_posterior\n";
  os.precision(17);
  for (const auto& p : trace) os << p.step << ',' << p.hamming_to_identity << ',' << p.log_posterior << '\n';
}

}  // namespace shuffleprior
