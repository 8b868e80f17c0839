#pragma once

#include <limits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "shuffleprior/lap.hpp"
#include "shuffleprior/permutation.hpp"

namespace shuffleprior {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// M = 0: every permutation equally likely.
struct UniformMode {};

/// M = I, so p(pi) is proportional to exp(-gamma * d_H(pi, id)).
struct HammingMode {};

/// M_ij = 1 - phi(|i - j|).
///
/// An empty penalty table is the hard indicator: M_ij = 1 inside the band and
/// forbidden outside it. Otherwise phi(u) = penalty[min(u, size - 1)], and an
/// infinite penalty forbids the pair.
struct BandedMode {
  std::size_t r = 1;
  std::vector<double> penalty;
};

/// Pairs across blocks are forbidden. Inside a block M is I (block Hamming) or 0.
struct BlockMode {
  std::vector<std::size_t> block_of;
  bool hamming_within = true;
};

/// Dense M; -infinity entries are forbidden pairs.
struct GeneralMode {
  Eigen::MatrixXd m;
};

/// M = Q, a doubly stochastic matrix.
struct LahiriLarsenMode {
  Eigen::MatrixXd q;
};

using PriorMode = std::variant<UniformMode, HammingMode, BandedMode, BlockMode, GeneralMode, LahiriLarsenMode>;

/// p(pi) proportional to exp(gamma * tr(Pi^T M)). Rows of M index responses,
/// columns index covariate rows, so pi(i) = j selects M_ij.
class PriorSpec {
 public:
  PriorSpec(double gamma, PriorMode mode);

  static PriorSpec uniform() { return PriorSpec(1.0, UniformMode{}); }
  static PriorSpec hamming(double gamma) { return PriorSpec(gamma, HammingMode{}); }

  double gamma() const noexcept { return gamma_; }
  const PriorMode& mode() const noexcept { return mode_; }
  bool is_uniform() const noexcept { return std::holds_alternative<UniformMode>(mode_); }

  /// Size implied by the mode, 0 when the mode works for any n.
  std::size_t fixed_size() const noexcept;

  /// M_ij, or -infinity for a forbidden pair.
  double mode_entry(std::size_t i, std::size_t j) const;
  bool admissible(std::size_t i, std::size_t j) const { return mode_entry(i, j) != kNegInf; }
  /// gamma * M_ij, or -infinity.
  double log_weight(std::size_t i, std::size_t j) const;

  /// Dense M with forbidden entries zeroed; pair with forbidden_mask().
  Eigen::MatrixXd dense_mode(std::size_t n) const;
  BoolMatrix forbidden_mask(std::size_t n) const;

 private:
  double gamma_;
  PriorMode mode_;
};

/// gamma * sum_i M[i, pi(i)], or -infinity if any selected pair is forbidden.
double log_prior_unnormalized(const PriorSpec& spec, const Permutation& p);

/// log psi(gamma), psi(gamma) = sum over P(n) of exp(-gamma * d_H(pi, id)).
double log_hamming_normalizer(std::size_t n, double gamma);
double hamming_normalizer(std::size_t n, double gamma);

/// P(d_H(pi, id) >= k) under the Hamming prior; requires 2 <= k <= n.
double hamming_tail(std::size_t n, double gamma, std::size_t k);

struct SparseSetting {
  double delta = 0.0;
};
struct BandedSetting {};
struct BlockSetting {
  double delta = 0.0;
};
using GammaSetting = std::variant<SparseSetting, BandedSetting, BlockSetting>;

/// (1 + delta) log n for sparse and block settings, 1 for banded.
double suggest_gamma(std::size_t n, const GammaSetting& setting);

struct TailBoundReport {
  std::size_t n = 0;
  std::size_t k = 0;
  double delta = 0.0;
  double upper_gamma = 0.0;
  double upper_tail = 0.0;
  double upper_bound = 0.0;
  bool upper_holds = false;
  double upper_margin = 0.0;  // bound - tail
  // informational: the lower-bound constant is only asymptotic
  double lower_gamma = 0.0;
  double lower_tail = 0.0;
  double lower_proxy = 0.0;  // (1/4) !k / k!
  bool lower_proxy_met = false;
};

/// Exact tail checks of the Hamming prior concentration bounds; requires 2 <= k <= n <= 8
/// and k < n for the lower-bound part (reported as NaN otherwise).
TailBoundReport verify_hamming_tail_bounds(std::size_t n, std::size_t k, double delta);

/// M_ij = I(|i - j| <= r) without forbidden entries.
PriorSpec banded_indicator_prior(double gamma, std::size_t r);

/// Exchangeable within-block Q: (1 - alpha) I + alpha / (n_b - 1) (11^T - I) on each block.
Eigen::MatrixXd exchangeable_block_q(std::size_t n, std::size_t blocks, double alpha);

}  // namespace shuffleprior
