#include "shuffleprior/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace shuffleprior {

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

std::size_t uniform_index(std::size_t lo, std::size_t hi, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Assigns a uniform derangement to the listed indices, which must currently be fixed points.
void derange(std::vector<std::size_t>& targets, std::span<const std::size_t> indices, Rng& rng) {
  const std::size_t d = indices.size();
  if (d < 2) return;
  std::vector<std::size_t> order(d);
  for (;;) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t a = d - 1; a > 0; --a) std::swap(order[a], order[uniform_index(0, a, rng)]);
    bool fixed_point = false;
    for (std::size_t a = 0; a < d && !fixed_point; ++a) fixed_point = order[a] == a;
    if (!fixed_point) break;
  }
  for (std::size_t a = 0; a < d; ++a) targets[indices[a]] = indices[order[a]];
}

// Uniform draw from {p : d_H(p, id) <= k} restricted to `indices`.
void sample_hamming_ball(std::vector<std::size_t>& targets, std::vector<std::size_t> indices,
                         std::size_t k, const std::vector<double>& log_der, Rng& rng) {
  const std::size_t m = indices.size();
  k = std::min(k, m);
  std::vector<double> log_w(k + 1);
  for (std::size_t d = 0; d <= k; ++d) log_w[d] = log_binomial(m, d) + log_der[d];
  const double top = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(k + 1);
  for (std::size_t d = 0; d <= k; ++d) w[d] = std::exp(log_w[d] - top);
  const std::size_t d = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
  if (d < 2) return;
  // partial Fisher-Yates picks d indices uniformly
  for (std::size_t a = 0; a < d; ++a) std::swap(indices[a], indices[uniform_index(a, m - 1, rng)]);
  derange(targets, std::span<const std::size_t>(indices.data(), d), rng);
}

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Permutation::Permutation(std::vector<std::size_t> targets) : targets_(std::move(targets)) {
  const std::size_t n = targets_.size();
  if (n == 0) throw std::invalid_argument("Permutation: size must be at least 1");
  std::vector<bool> seen(n, false);
  for (std::size_t t : targets_) {
    if (t >= n || seen[t]) throw std::invalid_argument("Permutation: targets are not a bijection");
    seen[t] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> t(n);
  std::iota(t.begin(), t.end(), std::size_t{0});
  return Permutation(std::move(t));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(size());
  for (std::size_t i = 0; i < size(); ++i) inv[targets_[i]] = i;
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& inner) const {
  if (inner.size() != size()) throw std::invalid_argument("Permutation::compose: size mismatch");
  std::vector<std::size_t> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = targets_[inner[i]];
  return Permutation(std::move(out));
}

bool Permutation::is_identity() const noexcept { return displaced_count(targets_) == 0; }

std::size_t hamming_distance(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming_distance: sizes " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()) + " differ");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
  return count;
}

std::size_t displaced_count(std::span<const std::size_t> targets) noexcept {
  std::size_t count = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) count += targets[i] != i;
  return count;
}

std::size_t max_displacement(std::span<const std::size_t> targets) noexcept {
  std::size_t worst = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) worst = std::max(worst, abs_diff(targets[i], i));
  return worst;
}

std::vector<double> log_derangement_table(std::size_t n) {
  std::vector<double> t(std::max<std::size_t>(n + 1, 2));
  t[0] = 0.0;
  t[1] = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 2; d < t.size(); ++d) {
    t[d] = std::log(static_cast<double>(d - 1)) + log_add(t[d - 1], t[d - 2]);
  }
  t.resize(n + 1);
  return t;
}

void ConstraintSpec::validate() const {
  if (n == 0) throw std::invalid_argument("ConstraintSpec: n must be at least 1");
  std::visit(
      [this](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SparseConstraint>) {
          if (c.k > n) throw std::invalid_argument("ConstraintSpec: sparse k exceeds n");
        } else if constexpr (std::is_same_v<T, BandedConstraint>) {
          if (c.r < 1 || c.r >= n) throw std::invalid_argument("ConstraintSpec: need 1 <= r < n");
        } else {
          if (c.blocks == 0 || n % c.blocks != 0) {
            throw std::invalid_argument("ConstraintSpec: block count must divide n");
          }
          if (c.k_per_block > n / c.blocks) {
            throw std::invalid_argument("ConstraintSpec: k per block exceeds block size");
          }
        }
      },
      kind);
}

std::vector<std::size_t> contiguous_blocks(std::size_t n, std::size_t blocks) {
  if (blocks == 0 || n % blocks != 0) {
    throw std::invalid_argument("contiguous_blocks: block count must divide n");
  }
  const std::size_t size = n / blocks;
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = i / size;
  return label;
}

bool satisfies(const ConstraintSpec& spec, const Permutation& p) {
  if (p.size() != spec.n) throw std::invalid_argument("satisfies: size mismatch");
  return std::visit(
      [&](const auto& c) -> bool {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SparseConstraint>) {
          return displaced_count(p.targets()) <= c.k;
        } else if constexpr (std::is_same_v<T, BandedConstraint>) {
          return max_displacement(p.targets()) <= c.r;
        } else {
          const std::size_t size = spec.n / c.blocks;
          std::vector<std::size_t> moved(c.blocks, 0);
          for (std::size_t i = 0; i < spec.n; ++i) {
            if (p[i] / size != i / size) return false;
            moved[i / size] += p[i] != i;
          }
          return std::all_of(moved.begin(), moved.end(),
                             [&](std::size_t m) { return m <= c.k_per_block; });
        }
      },
      spec.kind);
}

Permutation sample_constrained(const ConstraintSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t n = spec.n;
  std::vector<std::size_t> targets(n);
  std::iota(targets.begin(), targets.end(), std::size_t{0});

  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SparseConstraint>) {
          std::vector<std::size_t> all(n);
          std::iota(all.begin(), all.end(), std::size_t{0});
          sample_hamming_ball(targets, std::move(all), c.k, log_derangement_table(c.k), rng);
        } else if constexpr (std::is_same_v<T, BandedConstraint>) {
          const std::size_t r = c.r;
          const std::size_t sweeps = 10 * n * r;
          for (std::size_t s = 0; s < sweeps; ++s) {
            const std::size_t i = uniform_index(0, n - 1, rng);
            const std::size_t lo = i >= r ? i - r : 0;
            const std::size_t hi = std::min(i + r, n - 1);
            const std::size_t j = uniform_index(lo, hi, rng);
            if (abs_diff(targets[j], i) <= r && abs_diff(targets[i], j) <= r) {
              std::swap(targets[i], targets[j]);
            }
          }
        } else {
          const std::size_t size = n / c.blocks;
          const auto log_der = log_derangement_table(c.k_per_block);
          for (std::size_t b = 0; b < c.blocks; ++b) {
            std::vector<std::size_t> members(size);
            std::iota(members.begin(), members.end(), b * size);
            sample_hamming_ball(targets, std::move(members), c.k_per_block, log_der, rng);
          }
        }
      },
      spec.kind);
  return Permutation(std::move(targets));
}

}  // namespace shuffleprior
