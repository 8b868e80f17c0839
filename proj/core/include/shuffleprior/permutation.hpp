#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace shuffleprior {

using Rng = std::mt19937_64;

/// Independent stream seed from (base, stream) via a splitmix64 finaliser.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// A bijection on {0, ..., n-1}. Element i is mapped to targets()[i].
///
/// In a shuffled data set, response i is paired with covariate row (*this)[i].
class Permutation {
 public:
  /// Throws std::invalid_argument unless `targets` is a bijection with n >= 1.
  explicit Permutation(std::vector<std::size_t> targets);

  static Permutation identity(std::size_t n);

  std::size_t size() const noexcept { return targets_.size(); }
  std::size_t operator[](std::size_t i) const noexcept { return targets_[i]; }
  std::span<const std::size_t> targets() const noexcept { return targets_; }

  Permutation inverse() const;
  /// (this ∘ inner)(i) = this(inner(i)).
  Permutation compose(const Permutation& inner) const;
  bool is_identity() const noexcept;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> targets_;
};

/// Number of indices on which the two permutations disagree.
std::size_t hamming_distance(const Permutation& a, const Permutation& b);
/// Number of indices that are not fixed points.
std::size_t displaced_count(std::span<const std::size_t> targets) noexcept;
/// max_i |p(i) - i|.
std::size_t max_displacement(std::span<const std::size_t> targets) noexcept;

struct SparseConstraint {
  std::size_t k = 0;  // at most k displaced indices
};

struct BandedConstraint {
  std::size_t r = 1;  // max_i |p(i) - i| <= r
};

struct SparseBlockConstraint {
  std::size_t k_per_block = 0;
  std::size_t blocks = 1;  // contiguous blocks of equal size n / blocks
};

struct ConstraintSpec {
  std::variant<SparseConstraint, BandedConstraint, SparseBlockConstraint> kind;
  std::size_t n = 1;

  /// Throws std::invalid_argument on an inconsistent specification.
  void validate() const;
};

/// Contiguous block labels 0..blocks-1 for n indices; blocks must divide n.
std::vector<std::size_t> contiguous_blocks(std::size_t n, std::size_t blocks);

bool satisfies(const ConstraintSpec& spec, const Permutation& p);

/// Draws a permutation from the constraint set.
///
/// Sparse draws are exactly uniform on the Hamming ball {d_H(p, id) <= k}:
/// the displaced count is drawn with weight C(n, d) * !d and the displaced
/// indices receive a uniform derangement. Banded draws run a symmetric
/// swap chain of 10 * n * r steps from the identity and are therefore only
/// approximately uniform.
Permutation sample_constrained(const ConstraintSpec& spec, Rng& rng);

/// log(!d) for d = 0..n, from !d = (d - 1)(!(d-1) + !(d-2)) with !0 = 1, !1 = 0.
/// Entry 1 is -infinity.
std::vector<double> log_derangement_table(std::size_t n);

}  // namespace shuffleprior
