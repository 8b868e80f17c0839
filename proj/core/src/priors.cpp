#include "shuffleprior/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace shuffleprior {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// log of C(n, d) * !d * exp(-gamma d) for d = 0..n
std::vector<double> log_hamming_weights(std::size_t n, double gamma) {
  const auto der = log_derangement_table(n);
  std::vector<double> w(n + 1);
  for (std::size_t d = 0; d <= n; ++d) w[d] = log_binomial(n, d) + der[d] - gamma * static_cast<double>(d);
  return w;
}

}  // namespace

PriorSpec::PriorSpec(double gamma, PriorMode mode) : gamma_(gamma), mode_(std::move(mode)) {
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw std::invalid_argument("PriorSpec: gamma must be positive and finite");
  if (const auto* b = std::get_if<BandedMode>(&mode_)) {
    if (b->r < 1) throw std::invalid_argument("PriorSpec: banded r must be at least 1");
    for (double phi : b->penalty)
      if (std::isnan(phi) || phi < 0.0) throw std::invalid_argument("PriorSpec: banded penalties must be non-negative");
  } else if (const auto* g = std::get_if<GeneralMode>(&mode_)) {
    if (g->m.rows() != g->m.cols() || g->m.rows() == 0) throw std::invalid_argument("PriorSpec: M must be square");
    for (Eigen::Index k = 0; k < g->m.size(); ++k) {
      const double x = g->m.data()[k];
      if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
        throw std::invalid_argument("PriorSpec: M entries must be finite or -infinity");
    }
  } else if (const auto* l = std::get_if<LahiriLarsenMode>(&mode_)) {
    const auto& q = l->q;
    if (q.rows() != q.cols() || q.rows() == 0) throw std::invalid_argument("PriorSpec: Q must be square");
    if ((q.array() < 0.0).any() || !q.allFinite()) throw std::invalid_argument("PriorSpec: Q must be non-negative");
    const double row_dev = (q.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_dev = (q.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_dev > 1e-8 || col_dev > 1e-8) throw std::invalid_argument("PriorSpec: Q is not doubly stochastic");
  } else if (const auto* bl = std::get_if<BlockMode>(&mode_)) {
    if (bl->block_of.empty()) throw std::invalid_argument("PriorSpec: block labels are empty");
  }
}

std::size_t PriorSpec::fixed_size() const noexcept {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BlockMode>) return m.block_of.size();
        else if constexpr (std::is_same_v<T, GeneralMode>) return static_cast<std::size_t>(m.m.rows());
        else if constexpr (std::is_same_v<T, LahiriLarsenMode>) return static_cast<std::size_t>(m.q.rows());
        else return 0;
      },
      mode_);
}

double PriorSpec::mode_entry(std::size_t i, std::size_t j) const {
  return std::visit(
      [i, j](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, UniformMode>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, HammingMode>) {
          return i == j ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, BandedMode>) {
          const std::size_t u = abs_diff(i, j);
          if (m.penalty.empty()) return u <= m.r ? 1.0 : kNegInf;
          const double phi = m.penalty[std::min(u, m.penalty.size() - 1)];
          return std::isinf(phi) ? kNegInf : 1.0 - phi;
        } else if constexpr (std::is_same_v<T, BlockMode>) {
          if (m.block_of[i] != m.block_of[j]) return kNegInf;
          return (m.hamming_within && i == j) ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<T, GeneralMode>) {
          return m.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        } else {
          return m.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
      },
      mode_);
}

double PriorSpec::log_weight(std::size_t i, std::size_t j) const {
  const double m = mode_entry(i, j);
  return m == kNegInf ? kNegInf : gamma_ * m;
}

Eigen::MatrixXd PriorSpec::dense_mode(std::size_t n) const {
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd out(nn, nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double m = mode_entry(i, j);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m == kNegInf ? 0.0 : m;
    }
  return out;
}

BoolMatrix PriorSpec::forbidden_mask(std::size_t n) const {
  const auto nn = static_cast<Eigen::Index>(n);
  BoolMatrix out(nn, nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = !admissible(i, j);
  return out;
}

double log_prior_unnormalized(const PriorSpec& spec, const Permutation& p) {
  if (spec.fixed_size() != 0 && spec.fixed_size() != p.size())
    throw std::invalid_argument("log_prior_unnormalized: prior and permutation sizes differ");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = spec.mode_entry(i, p[i]);
    if (m == kNegInf) return kNegInf;
    total += m;
  }
  return spec.gamma() * total;
}

double log_hamming_normalizer(std::size_t n, double gamma) {
  if (n == 0) throw std::invalid_argument("log_hamming_normalizer: n must be at least 1");
  if (gamma < 0.0) throw std::invalid_argument("log_hamming_normalizer: gamma must be non-negative");
  // n! e^{-gamma n} sum_k (e^gamma - 1)^k / k!
  const double nd = static_cast<double>(n);
  const double base = std::log(std::expm1(gamma));
  std::vector<double> terms(n + 1);
  terms[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k)
    terms[k] = gamma == 0.0 ? kNegInf : static_cast<double>(k) * base - std::lgamma(static_cast<double>(k) + 1.0);
  return std::lgamma(nd + 1.0) - gamma * nd + log_sum_exp(terms);
}

double hamming_normalizer(std::size_t n, double gamma) { return std::exp(log_hamming_normalizer(n, gamma)); }

double hamming_tail(std::size_t n, double gamma, std::size_t k) {
  if (k < 2 || k > n) throw std::invalid_argument("hamming_tail: need 2 <= k <= n");
  if (gamma < 0.0) throw std::invalid_argument("hamming_tail: gamma must be non-negative");
  auto w = log_hamming_weights(n, gamma);
  std::vector<double> upper(w.begin() + static_cast<std::ptrdiff_t>(k), w.end());
  return std::min(1.0, std::exp(log_sum_exp(upper) - log_hamming_normalizer(n, gamma)));
}

double suggest_gamma(std::size_t n, const GammaSetting& setting) {
  if (n < 2) throw std::invalid_argument("suggest_gamma: n must be at least 2");
  const double logn = std::log(static_cast<double>(n));
  return std::visit(
      [logn](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BandedSetting>) return 1.0;
        else return (1.0 + s.delta) * logn;
      },
      setting);
}

TailBoundReport verify_hamming_tail_bounds(std::size_t n, std::size_t k, double delta) {
  if (n > 8) throw std::invalid_argument("verify_hamming_tail_bounds: exact regime requires n <= 8");
  if (k < 2 || k > n) throw std::invalid_argument("verify_hamming_tail_bounds: need 2 <= k <= n");
  if (!(delta > 0.0)) throw std::invalid_argument("verify_hamming_tail_bounds: delta must be positive");
  TailBoundReport rep;
  rep.n = n;
  rep.k = k;
  rep.delta = delta;
  const double logn = std::log(static_cast<double>(n));
  rep.upper_gamma = (1.0 + delta) * logn;
  rep.upper_tail = hamming_tail(n, rep.upper_gamma, k);
  rep.upper_bound = std::exp(-static_cast<double>(k) * delta * logn);
  rep.upper_holds = rep.upper_tail <= rep.upper_bound;
  rep.upper_margin = rep.upper_bound - rep.upper_tail;

  const auto der = log_derangement_table(k);
  rep.lower_proxy = 0.25 * std::exp(der[k] - std::lgamma(static_cast<double>(k) + 1.0));
  if (k < n) {
    rep.lower_gamma = std::log(static_cast<double>(n - k));
    rep.lower_tail = hamming_tail(n, rep.lower_gamma, k);
    rep.lower_proxy_met = rep.lower_tail >= rep.lower_proxy;
  } else {
    rep.lower_gamma = rep.lower_tail = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

PriorSpec banded_indicator_prior(double gamma, std::size_t r) {
  std::vector<double> penalty(r + 2, 0.0);
  penalty.back() = 1.0;
  return PriorSpec(gamma, BandedMode{r, std::move(penalty)});
}

Eigen::MatrixXd exchangeable_block_q(std::size_t n, std::size_t blocks, double alpha) {
  const auto label = contiguous_blocks(n, blocks);
  const std::size_t nb = n / blocks;
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("exchangeable_block_q: alpha must lie in [0, 1]");
  if (nb < 2 && alpha > 0.0) throw std::invalid_argument("exchangeable_block_q: singleton blocks admit no mismatch");
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(nn, nn);
  const double off = nb > 1 ? alpha / static_cast<double>(nb - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (label[i] == label[j])
        q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = i == j ? 1.0 - alpha : off;
  return q;
}

}  // namespace shuffleprior
