#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "shuffleprior/mcmc.hpp"
#include "shuffleprior/models.hpp"
#include "shuffleprior/priors.hpp"

namespace shuffleprior {

enum class EstepKind { mcmc, exact };

struct EmConfig {
  std::size_t max_iterations = 400;
  /// Template for every E-step chain. The seed is re-derived per iteration and
  /// `init` applies to the first iteration only.
  ChainConfig chain = default_chain();
  std::optional<ModelParams> initial;  // defaults to the naive fit
  bool warm_start_chains = true;
  bool lap_init_first_iteration_only = true;
  double tolerance = 1e-6;  // relative parameter change
  EstepKind estep = EstepKind::mcmc;
  /// Restricts exact E-steps to a constraint set.
  std::function<bool(std::span<const std::size_t>)> exact_admissible;

  static ChainConfig default_chain() {
    ChainConfig c;
    c.init = ChainInit::map;
    return c;
  }
  void validate() const;
};

struct EmIterate {
  std::size_t iteration = 0;
  double surrogate = 0.0;  // expected complete-data NLL at the new parameters
  double acceptance_rate = 0.0;
  std::size_t invalid_steps = 0;
  Eigen::VectorXd params;  // flatten() of the new parameters
};

struct EmResult {
  ModelParams params;
  std::optional<ChainResult> last_chain;
  std::vector<EmIterate> trajectory;
  bool converged = false;
};

/// Monte-Carlo EM: alternate E-step chains (or exact enumeration) and reduced M-steps.
EmResult fit_em(const LinkedDataset& data, ModelKind kind, const PriorSpec& prior, const EmConfig& cfg);

/// Expected complete-data negative log-likelihood in n-row form.
double surrogate_nll(const LinkedDataset& data, const ModelParams& theta, const ReducedStats& stats);

void write_trajectory_csv(std::ostream& os, const std::vector<EmIterate>& trajectory);

}  // namespace shuffleprior
