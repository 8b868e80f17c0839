#pragma once

#include <Eigen/Dense>

#include "shuffleprior/permutation.hpp"

namespace shuffleprior {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Square cost matrix with an optional forbidden mask (empty mask = nothing forbidden).
struct CostMatrix {
  Eigen::MatrixXd cost;
  BoolMatrix forbidden;

  explicit CostMatrix(Eigen::MatrixXd c, BoolMatrix mask = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(cost.rows()); }
  bool is_forbidden(Eigen::Index i, Eigen::Index j) const {
    return forbidden.size() != 0 && forbidden(i, j);
  }
};

struct Assignment {
  Permutation perm;         // row i is assigned column perm[i]
  double objective = 0.0;   // sum_i cost(i, perm[i])
  Eigen::VectorXd row_potential;
  Eigen::VectorXd col_potential;
};

/// Shortest augmenting path (Jonker-Volgenant / Crouse). Forbidden entries are
/// treated as +infinity and never selected. Throws InfeasibleAssignment.
Assignment solve_exact(const CostMatrix& c);

struct SinkhornOptions {
  double epsilon = 0.0;  // <= 0 picks 0.05 * (max - min) of the admissible costs
  int iterations = 1000;
  double tolerance = 1e-6;  // max marginal violation
};

struct SinkhornResult {
  Permutation perm;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  /// 1 when the plan-support LAP succeeded, 2 when greedy rounding was used,
  /// 3 when both failed and the exact solver was called.
  int rounding_stage = 1;
};

/// Entropic matrix scaling followed by rounding of the plan to a permutation.
SinkhornResult solve_sinkhorn(const CostMatrix& c, const SinkhornOptions& opt = {});

/// A maximiser of tr(P^T M) over permutations avoiding `mask`.
Permutation mode_of_prior(const Eigen::MatrixXd& m, const BoolMatrix& mask = {});

struct DualCertificate {
  double min_reduced_cost = 0.0;       // over admissible entries
  double max_selected_abs = 0.0;       // |reduced cost| on the selected entries
};

DualCertificate dual_certificate(const CostMatrix& c, const Assignment& a);

}  // namespace shuffleprior
