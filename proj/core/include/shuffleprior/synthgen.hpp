#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Dense>

#include "shuffleprior/models.hpp"
#include "shuffleprior/permutation.hpp"

namespace shuffleprior {

/// y_i = x_{pi*(i)}^T beta* + sigma e_i with x ~ N(0, I_d) and beta* uniform on the sphere.
struct LinearScenario {
  std::size_t d = 20;
  double sigma = 1.0;
  double beta_norm = 3.0;
  bool intercept = false;  // first column of X is all ones (and counts toward d)
};

/// y_i ~ Poisson(exp(x_{pi*(i)}^T beta* + beta0*)), beta0* ~ N(0, 1).
struct PoissonScenario {
  std::size_t d = 20;
  double beta_norm = 3.0;
};

/// z_i = (x_{pi*(i)}, y_i) ~ N(0, (tau - rho) I + rho 11^T).
struct MvnScenario {
  std::size_t p = 5;
  std::size_t q = 5;
  double tau = 1.0;
  double rho = 0.8;
};

using ModelScenario = std::variant<LinearScenario, PoissonScenario, MvnScenario>;

struct ScenarioSpec {
  ModelScenario model = LinearScenario{};
  ConstraintSpec constraint{SparseConstraint{0}, 1000};
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t n() const noexcept { return constraint.n; }
  ModelKind kind() const noexcept { return static_cast<ModelKind>(model.index()); }
};

struct Scenario {
  LinkedDataset data;  // shuffled: y_i belongs with x row pi_star[i]
  Permutation pi_star;
  ModelParams truth;
  std::size_t clipped_predictors = 0;  // Poisson linear predictors clipped at 20
};

Scenario generate(const ScenarioSpec& spec);

/// Rows of X reordered so that y_i sits next to its true partner.
LinkedDataset unshuffle(const LinkedDataset& data, const Permutation& pi_star);

/// ||est - truth|| / ||truth||. Throws std::invalid_argument when truth is zero.
double relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);
/// Correlation matrix of precision^{-1}.
Eigen::MatrixXd correlation_from_precision(const Eigen::MatrixXd& precision);
/// Frobenius distance between the correlation matrices implied by two precisions.
double correlation_error(const Eigen::MatrixXd& precision_est, const Eigen::MatrixXd& precision_true);

/// REE of an estimate: relative beta error for LR/Poisson, correlation error for MVN.
double ree(const ModelParams& estimate, const ModelParams& truth);

}  // namespace shuffleprior
