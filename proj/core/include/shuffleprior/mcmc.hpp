#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "shuffleprior/models.hpp"
#include "shuffleprior/permutation.hpp"
#include "shuffleprior/priors.hpp"

namespace shuffleprior {

/// Uniform unordered pair of distinct indices.
struct GlobalSwap {};
/// i uniform, j uniform on the window [i - r, i + r] clipped to [0, n).
struct LocalSwap {
  std::size_t r = 1;
};
/// Uniform block, then a uniform distinct pair inside it.
struct BlockSwap {
  std::vector<std::size_t> block_of;
};
using ProposalScheme = std::variant<GlobalSwap, LocalSwap, BlockSwap>;

enum class ChainInit { map, warm_start, identity };

struct ChainConfig {
  std::size_t steps = 8000;    // m
  std::size_t burn_in = 4000;  // b; the state after step t is retained when t > b
  std::uint64_t seed = 0;
  ChainInit init = ChainInit::identity;
  std::optional<Permutation> warm_start;
  ProposalScheme scheme = GlobalSwap{};
  std::size_t trace_every = 0;       // 0 disables the trace
  std::size_t refresh_every = 10000;  // flush the lazy accumulator
  bool check_states = false;          // assert the constraint on every retained state
  /// Called with (step, targets) for every retained state.
  std::function<void(std::size_t, std::span<const std::size_t>)> on_retained;

  void validate() const;
};

struct TracePoint {
  std::size_t step = 0;
  std::size_t hamming_to_identity = 0;
  double log_posterior = 0.0;
};

struct ChainResult {
  ReducedStats stats;
  Permutation last_state;
  double acceptance_rate = 0.0;
  std::size_t invalid_steps = 0;  // local scheme only
  std::size_t retained = 0;
  std::vector<TracePoint> trace;
};

/// Metropolis-Hastings swap chain on p(pi | D, theta) proportional to
/// exp(sum_i log p(x_{pi(i)}, y_i) + gamma tr(Pi^T M)). Uses cfg.scheme.
ChainResult run_chain(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                      const ChainConfig& cfg);

/// run_chain with LocalSwap{r}. A proposal that would move an index out of the band
/// is counted in invalid_steps and the current state is kept.
ChainResult run_chain_local(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                            ChainConfig cfg, std::size_t r);

/// run_chain with BlockSwap; the chain never crosses blocks.
ChainResult run_chain_block(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                            ChainConfig cfg, std::vector<std::size_t> block_of);

/// argmax_pi p(pi | D, theta): one assignment problem on log p(x_j, y_i) + gamma M_ij.
Permutation map_permutation(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior);

double log_posterior_unnormalized(const PairLikelihood& lik, const PriorSpec& prior, const Permutation& p);

/// Change in log posterior from swapping pi(i) and pi(j); -infinity when the swap
/// lands on a forbidden pair.
double swap_log_ratio(const PairLikelihood& lik, const PriorSpec& prior, std::span<const std::size_t> targets,
                      std::size_t i, std::size_t j);

/// Exact E[Pi^T Y | D, theta] by enumerating P(n); n <= 9. Permutations outside
/// `admissible` (if given) are skipped.
ReducedStats exact_posterior_stats(const LinkedDataset& data, const ModelParams& theta, const PriorSpec& prior,
                                   const std::function<bool(std::span<const std::size_t>)>& admissible = {});

void write_trace_csv(std::ostream& os, const std::vector<TracePoint>& trace);

}  // namespace shuffleprior
