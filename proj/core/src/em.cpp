#include "shuffleprior/em.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace shuffleprior {

void EmConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("EmConfig: at least one iteration is required");
  if (!(tolerance > 0.0)) throw std::invalid_argument("EmConfig: tolerance must be positive");
  if (estep == EstepKind::mcmc) chain.validate();
}

double surrogate_nll(const LinkedDataset& data, const ModelParams& theta, const ReducedStats& stats) {
  return reduced_objective(data, theta, stats);
}

EmResult fit_em(const LinkedDataset& data, ModelKind kind, const PriorSpec& prior, const EmConfig& cfg) {
  cfg.validate();
  data.validate();
  ModelParams theta = cfg.initial ? *cfg.initial : naive_fit(kind, data);
  if (kind_of(theta) != kind) throw std::invalid_argument("fit_em: initial parameters belong to another model");

  EmResult out{theta, std::nullopt, {}, false};
  std::optional<Permutation> last_state;

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    ReducedStats stats;
    EmIterate rec;
    rec.iteration = it;
    if (cfg.estep == EstepKind::exact) {
      stats = exact_posterior_stats(data, theta, prior, cfg.exact_admissible);
    } else {
      ChainConfig cc = cfg.chain;
      cc.seed = derive_seed(cfg.chain.seed, it);
      if (it > 0) {
        if (cfg.warm_start_chains && last_state) {
          cc.init = ChainInit::warm_start;
          cc.warm_start = last_state;
        } else {
          cc.init = cfg.lap_init_first_iteration_only ? ChainInit::identity : ChainInit::map;
        }
      }
      ChainResult chain = run_chain(data, theta, prior, cc);
      stats = chain.stats;
      last_state = chain.last_state;
      rec.acceptance_rate = chain.acceptance_rate;
      rec.invalid_steps = chain.invalid_steps;
      out.last_chain = std::move(chain);
    }

    ModelParams next = mstep(kind, data, stats, &theta);
    rec.surrogate = surrogate_nll(data, next, stats);
    rec.params = flatten(next);
    out.trajectory.push_back(rec);

    const Eigen::VectorXd before = flatten(theta);
    const double change = (rec.params - before).norm() / std::max(before.norm(), 1e-12);
    theta = std::move(next);
    if (change < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.params = std::move(theta);
  return out;
}

void write_trajectory_csv(std::ostream& os, const std::vector<EmIterate>& trajectory) {
  os << "iteration,surrogate,acceptance_rate,invalid_steps";
  const Eigen::Index width = trajectory.empty() ? 0 : trajectory.front().params.size();
  for (Eigen::Index k = 0; k < width; ++k) os << ",theta" << k;
  os << '\n';
  os.precision(17);
  for (const auto& r : trajectory) {
    os << r.iteration << ',' << r.surrogate << ',' << r.acceptance_rate << ',' << r.invalid_steps;
    for (Eigen::Index k = 0; k < r.params.size(); ++k) os << ',' << r.params(k);
    os << '\n';
  }
}

}  // namespace shuffleprior
