#pragma once

#include <variant>

#include <Eigen/Dense>

#include "shuffleprior/models.hpp"

namespace shuffleprior {

/// Known expectation Q = E[Pi*] for the Lahiri-Larsen correction.
struct DenseQ {
  Eigen::MatrixXd q;
};
/// Q = I_B (x) Q0 with Q0 = (1 - alpha) I + alpha / (n_b - 1) (11^T - I) on contiguous blocks.
struct ExchangeableBlocks {
  std::size_t blocks = 1;
  double alpha = 0.0;
};

struct LLSpec {
  std::variant<DenseQ, ExchangeableBlocks> form;

  /// Throws std::invalid_argument unless Q is doubly stochastic to 1e-8 and sized n.
  void validate(std::size_t n) const;
  /// Q * m without materialising Q in the block form.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
  /// Q^T * m.
  Eigen::MatrixXd apply_transpose(const Eigen::MatrixXd& m) const;
  Eigen::MatrixXd dense(std::size_t n) const;
};

/// beta = ((QX)^T QX)^{-1} (QX)^T Y.
Eigen::VectorXd ll_fit_lr(const LinkedDataset& data, const LLSpec& q);

struct LLMvnResult {
  MvnParams params;
  bool repaired = false;  // eigenvalues of the modified covariance were floored
};

/// Inverse of the covariance with cross block X^T Q^T Y / n.
LLMvnResult ll_fit_mvn(const LinkedDataset& data, const LLSpec& q);

/// Centred moving average of each column over windows of r rows, truncated at the ends.
/// Odd r uses (r-1)/2 rows either side; even r uses r/2 before and r/2 - 1 after.
Eigen::MatrixXd sliding_window_average(const Eigen::MatrixXd& m, std::size_t r);

/// naive_fit on window-averaged X and Y (LR or MVN).
ModelParams averaging_fit(const LinkedDataset& data, std::size_t r, ModelKind kind);

struct HuberOptions {
  double c = 1.345;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

/// Huber M-estimate by IRLS with MAD scale. Throws ConvergenceFailure.
Eigen::VectorXd huber_fit_lr(const LinkedDataset& data, const HuberOptions& opt = {});

}  // namespace shuffleprior
