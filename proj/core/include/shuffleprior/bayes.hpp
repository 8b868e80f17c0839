#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "shuffleprior/models.hpp"
#include "shuffleprior/priors.hpp"

namespace shuffleprior {

struct DaConfig {
  std::size_t outer_iterations = 1000;  // posterior draws of (beta, sigma2)
  std::size_t augmentation_draws = 100;  // permutations per augmentation step
  std::size_t thinning = 40;            // MH steps between kept permutations
  PriorSpec prior = PriorSpec::uniform();
  std::uint64_t seed = 0;
  /// Skip the augmentation step and condition on this permutation throughout.
  std::optional<Permutation> fixed_permutation;

  void validate() const;
};

struct DaResult {
  Eigen::MatrixXd beta_draws;  // outer_iterations x d
  Eigen::VectorXd sigma2_draws;
  double acceptance_rate = 0.0;  // averaged over augmentation chains
  Permutation last_state;
};

/// Data augmentation for y = x^T beta + e under p(beta, sigma2) proportional to 1 / sigma2.
/// The design X should already contain an intercept column if one is wanted.
DaResult run_data_augmentation(const LinkedDataset& data, const DaConfig& cfg);

struct ParameterSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

ParameterSummary summarize(const Eigen::VectorXd& draws);

/// Columns beta1..betad, sigma2.
void write_draws_csv(std::ostream& os, const DaResult& result);
/// {"beta": [...], "sigma2": {...}} with mean, sd, q05 and q95 for each parameter.
void write_summary_json(std::ostream& os, const DaResult& result);

}  // namespace shuffleprior
