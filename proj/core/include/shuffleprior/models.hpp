#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "shuffleprior/permutation.hpp"

namespace shuffleprior {

/// Observed pairs: response i sits next to covariate row i, but its true partner
/// is row pi*(i). For MVN data X holds the p "x" columns and Y the q "y" columns.
struct LinkedDataset {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  /// Throws std::invalid_argument on shape mismatch or non-finite values.
  void validate() const;
};

enum class ModelKind { linear, poisson, mvn };

const char* to_string(ModelKind kind) noexcept;
/// Accepts "lr"/"linear", "poisson"/"glm", "mvn".
ModelKind parse_model_kind(const std::string& name);

struct LinearParams {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
};

struct PoissonParams {
  Eigen::VectorXd beta;
  double intercept = 0.0;
};

/// Joint normal on z = (x, y).
struct MvnParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
};

using ModelParams = std::variant<LinearParams, PoissonParams, MvnParams>;

ModelKind kind_of(const ModelParams& p) noexcept;

/// LR: (beta, sigma2). Poisson: (intercept, beta). MVN: (mean, vec(precision)).
Eigen::VectorXd flatten(const ModelParams& p);

/// Monte-Carlo average of Pi^T Y. Row j is the expected response paired with x_j.
struct ReducedStats {
  Eigen::MatrixXd pty;
  std::size_t samples = 0;

  /// X^T pty / n (the cross block used by the MVN M-step, before centering).
  Eigen::MatrixXd xpty(const Eigen::MatrixXd& x) const;
};

/// Pi^T Y for a single permutation: row p[i] holds y_i.
ReducedStats stats_from_permutation(const Eigen::MatrixXd& y, const Permutation& p);

/// log p(x, y; theta) for a single pair.
double pair_loglik(const ModelParams& theta, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Cached per-pair log-likelihoods: each call is O(1) for LR and Poisson and O(q) for MVN.
class PairLikelihood {
 public:
  PairLikelihood(const LinkedDataset& data, const ModelParams& theta);

  /// log p(x_j, y_i; theta).
  double operator()(std::size_t i, std::size_t j) const {
    switch (kind_) {
      case ModelKind::linear: {
        const double r = y0_[i] - eta_[j];
        return constant_ - r * r * half_inv_var_;
      }
      case ModelKind::poisson:
        return y0_[i] * eta_[j] - exp_eta_[j] - log_fact_[i];
      default:
        return constant_ - 0.5 * (a_[j] + b_[i]) - w_.row(static_cast<Eigen::Index>(j)).dot(yc_.row(static_cast<Eigen::Index>(i)));
    }
  }

  std::size_t size() const noexcept { return n_; }
  /// Full matrix, rows index responses and columns index covariate rows.
  Eigen::MatrixXd matrix() const;
  /// sum_i log p(x_{p(i)}, y_i).
  double total(const Permutation& p) const;

 private:
  ModelKind kind_;
  std::size_t n_;
  double constant_ = 0.0;
  double half_inv_var_ = 0.0;
  std::vector<double> y0_, eta_, exp_eta_, log_fact_, a_, b_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w_, yc_;
};

struct MstepInfo {
  int newton_iterations = 0;
  double gradient_norm = 0.0;
  bool ridge_added = false;
};

/// Minimiser of the expected complete-data NLL using only the n-row statistic.
/// `warm` seeds the Poisson Newton iteration. Throws SingularSystem or ConvergenceFailure.
ModelParams mstep(ModelKind kind, const LinkedDataset& data, const ReducedStats& stats,
                  const ModelParams* warm = nullptr, MstepInfo* info = nullptr);

/// M-step with the identity expectation (stats.pty = Y).
ModelParams naive_fit(ModelKind kind, const LinkedDataset& data);
/// M-step with the true pairing.
ModelParams oracle_fit(ModelKind kind, const LinkedDataset& data, const Permutation& pi_star);

/// sum_ij E[pi_ij] * (-log p(x_j, y_i; theta)) evaluated in n-row form. Exact, including
/// constants, whenever E is doubly stochastic.
double reduced_objective(const LinkedDataset& data, const ModelParams& theta, const ReducedStats& stats);

/// Ordinary least squares through column-pivoted QR. Throws SingularSystem on rank deficiency.
Eigen::MatrixXd least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace shuffleprior
