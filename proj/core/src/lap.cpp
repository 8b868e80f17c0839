#include "shuffleprior/lap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "shuffleprior/errors.hpp"

namespace shuffleprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense row-major copy with forbidden entries set to +inf.
std::vector<double> masked_costs(const CostMatrix& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  std::vector<double> out(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i * n + j)] = c.is_forbidden(i, j) ? kInf : c.cost(i, j);
  return out;
}

struct SapState {
  std::size_t n;
  const std::vector<double>& cost;
  std::vector<double> u, v, shortest;
  std::vector<long> path, row4col, col4row;
  std::vector<std::size_t> remaining;
  std::vector<bool> sr, sc;

  SapState(std::size_t size, const std::vector<double>& c)
      : n(size), cost(c), u(n, 0.0), v(n, 0.0), shortest(n), path(n, -1), row4col(n, -1),
        col4row(n, -1), remaining(n), sr(n), sc(n) {}

  // Returns the sink column, or -1 when no augmenting path exists.
  long augment_from(std::size_t row, double& min_val) {
    min_val = 0.0;
    std::size_t left = n;
    for (std::size_t it = 0; it < n; ++it) remaining[it] = n - it - 1;
    std::fill(sr.begin(), sr.end(), false);
    std::fill(sc.begin(), sc.end(), false);
    std::fill(shortest.begin(), shortest.end(), kInf);

    std::size_t i = row;
    for (;;) {
      long index = -1;
      double lowest = kInf;
      sr[i] = true;
      for (std::size_t it = 0; it < left; ++it) {
        const std::size_t j = remaining[it];
        const double r = min_val + cost[i * n + j] - u[i] - v[j];
        if (r < shortest[j]) {
          path[j] = static_cast<long>(i);
          shortest[j] = r;
        }
        if (shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == -1)) {
          lowest = shortest[j];
          index = static_cast<long>(it);
        }
      }
      min_val = lowest;
      if (min_val == kInf) return -1;
      const std::size_t j = remaining[static_cast<std::size_t>(index)];
      sc[j] = true;
      remaining[static_cast<std::size_t>(index)] = remaining[--left];
      if (row4col[j] == -1) return static_cast<long>(j);
      i = static_cast<std::size_t>(row4col[j]);
    }
  }
};

double objective_of(const CostMatrix& c, const Permutation& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    total += c.cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
  return total;
}

double log_sum_exp(const double* vals, std::size_t count) {
  double hi = -kInf;
  for (std::size_t k = 0; k < count; ++k) hi = std::max(hi, vals[k]);
  if (hi == -kInf) return -kInf;
  double s = 0.0;
  for (std::size_t k = 0; k < count; ++k) s += std::exp(vals[k] - hi);
  return hi + std::log(s);
}

}  // namespace

CostMatrix::CostMatrix(Eigen::MatrixXd c, BoolMatrix mask) : cost(std::move(c)), forbidden(std::move(mask)) {
  if (cost.rows() != cost.cols() || cost.rows() == 0)
    throw std::invalid_argument("CostMatrix: cost must be square and non-empty");
  if (forbidden.size() != 0 && (forbidden.rows() != cost.rows() || forbidden.cols() != cost.cols()))
    throw std::invalid_argument("CostMatrix: mask shape differs from cost shape");
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index j = 0; j < cost.cols(); ++j)
      if (!is_forbidden(i, j) && !std::isfinite(cost(i, j)))
        throw std::invalid_argument("CostMatrix: admissible entries must be finite");
}

Assignment solve_exact(const CostMatrix& c) {
  const std::size_t n = c.size();
  const auto cost = masked_costs(c);
  SapState s(n, cost);

  for (std::size_t row = 0; row < n; ++row) {
    double min_val = 0.0;
    const long sink = s.augment_from(row, min_val);
    if (sink < 0) throw InfeasibleAssignment("solve_exact: no perfect matching avoids the forbidden entries");

    s.u[row] += min_val;
    for (std::size_t i = 0; i < n; ++i)
      if (s.sr[i] && i != row) s.u[i] += min_val - s.shortest[static_cast<std::size_t>(s.col4row[i])];
    for (std::size_t j = 0; j < n; ++j)
      if (s.sc[j]) s.v[j] -= min_val - s.shortest[j];

    auto j = sink;
    for (;;) {
      const long i = s.path[static_cast<std::size_t>(j)];
      s.row4col[static_cast<std::size_t>(j)] = i;
      std::swap(s.col4row[static_cast<std::size_t>(i)], j);
      if (static_cast<std::size_t>(i) == row) break;
    }
  }

  std::vector<std::size_t> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = static_cast<std::size_t>(s.col4row[i]);
  Permutation perm(std::move(targets));
  const double obj = objective_of(c, perm);
  return Assignment{std::move(perm), obj, Eigen::Map<Eigen::VectorXd>(s.u.data(), static_cast<Eigen::Index>(n)),
                    Eigen::Map<Eigen::VectorXd>(s.v.data(), static_cast<Eigen::Index>(n))};
}

SinkhornResult solve_sinkhorn(const CostMatrix& c, const SinkhornOptions& opt) {
  const std::size_t n = c.size();
  const auto cost = masked_costs(c);

  double eps = opt.epsilon;
  if (eps <= 0.0) {
    double lo = kInf, hi = -kInf;
    for (double x : cost)
      if (x < kInf) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    eps = 0.05 * (hi - lo);
    if (!(eps > 0.0)) eps = 1.0;  // constant costs: every plan is optimal
  }

  // plan_ij = exp((f_i + g_j - C_ij) / eps), unit marginals
  std::vector<double> f(n, 0.0), g(n, 0.0), buf(n);
  bool converged = false;
  int it = 0;
  for (; it < opt.iterations && !converged; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = (g[j] - cost[i * n + j]) / eps;
      f[i] = -eps * log_sum_exp(buf.data(), n);
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - cost[i * n + j]) / eps;
      g[j] = -eps * log_sum_exp(buf.data(), n);
    }
    // columns are exact after the g update; rows carry the violation
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) buf[j] = (f[i] + g[j] - cost[i * n + j]) / eps;
      worst = std::max(worst, std::abs(std::exp(log_sum_exp(buf.data(), n)) - 1.0));
    }
    converged = worst < opt.tolerance;
  }

  const auto idx = [](std::size_t k) { return static_cast<Eigen::Index>(k); };
  Eigen::MatrixXd log_plan(idx(n), idx(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) log_plan(idx(i), idx(j)) = (f[i] + g[j] - cost[i * n + j]) / eps;

  // stage 1: exact assignment on -log(plan) over the plan support
  const double support = std::log(1e-8);
  BoolMatrix off = (log_plan.array() <= support);
  Eigen::MatrixXd neg = -log_plan;
  neg = off.select(Eigen::MatrixXd::Zero(idx(n), idx(n)), neg);
  try {
    Assignment a = solve_exact(CostMatrix(neg, off));
    const double obj = objective_of(c, a.perm);
    return SinkhornResult{std::move(a.perm), obj, converged, it, 1};
  } catch (const InfeasibleAssignment&) {
  }

  // stage 2: greedy row argmax, strongest rows first
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = log_plan.row(idx(i)).maxCoeff();
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });
  std::vector<bool> used(n, false);
  std::vector<std::size_t> targets(n);
  bool repaired = true;
  for (std::size_t i : rows) {
    long pick = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j] || cost[i * n + j] == kInf) continue;
      if (pick < 0 || log_plan(idx(i), idx(j)) > log_plan(idx(i), static_cast<Eigen::Index>(pick)))
        pick = static_cast<long>(j);
    }
    if (pick < 0) {
      repaired = false;
      break;
    }
    used[static_cast<std::size_t>(pick)] = true;
    targets[i] = static_cast<std::size_t>(pick);
  }
  if (repaired) {
    Permutation perm(std::move(targets));
    const double obj = objective_of(c, perm);
    return SinkhornResult{std::move(perm), obj, converged, it, 2};
  }

  Assignment a = solve_exact(c);
  return SinkhornResult{std::move(a.perm), a.objective, converged, it, 3};
}

Permutation mode_of_prior(const Eigen::MatrixXd& m, const BoolMatrix& mask) {
  Eigen::MatrixXd c = -m;
  if (mask.size() != 0) c = mask.select(Eigen::MatrixXd::Zero(m.rows(), m.cols()), c);
  return solve_exact(CostMatrix(std::move(c), mask)).perm;
}

DualCertificate dual_certificate(const CostMatrix& c, const Assignment& a) {
  DualCertificate cert{kInf, 0.0};
  const auto n = static_cast<Eigen::Index>(c.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (c.is_forbidden(i, j)) continue;
      const double r = c.cost(i, j) - a.row_potential(i) - a.col_potential(j);
      cert.min_reduced_cost = std::min(cert.min_reduced_cost, r);
      if (static_cast<std::size_t>(j) == a.perm[static_cast<std::size_t>(i)])
        cert.max_selected_abs = std::max(cert.max_selected_abs, std::abs(r));
    }
  }
  return cert;
}

}  // namespace shuffleprior
