#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::vector<Perm> all_permutations(std::size_t n) {
  Perm p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<Perm> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::size_t fixed_points(const Perm& p) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < p.size(); ++i) c += p[i] == i;
  return c;
}

double hamming_normalizer(std::size_t n, double gamma) {
  double s = 0.0;
  for (const auto& p : all_permutations(n)) s += std::exp(-gamma * static_cast<double>(n - fixed_points(p)));
  return s;
}

double hamming_tail(std::size_t n, double gamma, std::size_t k) {
  double num = 0.0, den = 0.0;
  for (const auto& p : all_permutations(n)) {
    const std::size_t d = n - fixed_points(p);
    const double w = std::exp(-gamma * static_cast<double>(d));
    den += w;
    if (d >= k) num += w;
  }
  return num / den;
}

LapSolution brute_lap(const Eigen::MatrixXd& cost, const std::vector<std::vector<bool>>& forbidden) {
  const auto n = static_cast<std::size_t>(cost.rows());
  LapSolution best{kInf, {}};
  for (const auto& p : all_permutations(n)) {
    double s = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!forbidden.empty() && forbidden[i][p[i]]) ok = false;
      s += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
    }
    if (ok && s < best.objective) best = {s, p};
  }
  return best;
}

double gaussian_logpdf(double y, double mean, double var) {
  return -0.5 * std::log(2.0 * kPi * var) - (y - mean) * (y - mean) / (2.0 * var);
}

double poisson_logpmf(double y, double rate) {
  return y * std::log(rate) - rate - std::lgamma(y + 1.0);
}

double mvn_logpdf(const Eigen::VectorXd& z, const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision) {
  const Eigen::VectorXd c = z - mean;
  const double k = static_cast<double>(z.size());
  return 0.5 * std::log(precision.determinant()) - 0.5 * c.dot(precision * c) - 0.5 * k * std::log(2.0 * kPi);
}

std::vector<double> enumerated_posterior(std::size_t n, const PairLogLik& lik, const LogWeight& prior,
                                         const std::function<bool(const Perm&)>& admissible) {
  const auto perms = all_permutations(n);
  std::vector<double> logw(perms.size(), -kInf);
  for (std::size_t k = 0; k < perms.size(); ++k) {
    if (admissible && !admissible(perms[k])) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += lik(i, perms[k][i]) + prior(i, perms[k][i]);
    logw[k] = s;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> probs(perms.size());
  double z = 0.0;
  for (std::size_t k = 0; k < perms.size(); ++k) z += probs[k] = std::isfinite(logw[k]) ? std::exp(logw[k] - top) : 0.0;
  for (auto& v : probs) v /= z;
  return probs;
}

Eigen::MatrixXd expected_matrix(std::size_t n, const std::vector<double>& probs) {
  const auto perms = all_permutations(n);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < perms.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perms[k][i])) += probs[k];
  return e;
}

std::size_t lex_rank(const Perm& p) {
  // Lehmer code
  const std::size_t n = p.size();
  std::size_t rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j) smaller += p[j] < p[i];
    std::size_t f = 1;
    for (std::size_t k = 2; k < n - i; ++k) f *= k;
    rank += smaller * f;
  }
  return rank;
}

double n2_objective_lr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& e,
                       const Eigen::VectorXd& beta, double sigma2) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) s -= e(i, j) * gaussian_logpdf(y(i), x.row(j).dot(beta), sigma2);
  return s;
}

double n2_objective_poisson(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& e,
                            const Eigen::VectorXd& beta, double intercept) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      s -= e(i, j) * poisson_logpmf(y(i), std::exp(intercept + x.row(j).dot(beta)));
  return s;
}

double n2_objective_mvn(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& e,
                        const Eigen::VectorXd& mean, const Eigen::MatrixXd& precision) {
  const Eigen::Index p = x.cols(), q = y.cols();
  double s = 0.0;
  Eigen::VectorXd z(p + q);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      z << x.row(j).transpose(), y.row(i).transpose();
      s -= e(i, j) * mvn_logpdf(z, mean, precision);
    }
  return s;
}

LrFit n2_minimizer_lr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& e) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      a += e(i, j) * x.row(j).transpose() * x.row(j);
      b += e(i, j) * y(i) * x.row(j).transpose();
    }
  LrFit f;
  f.beta = a.fullPivLu().solve(b);
  double rss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = y(i) - x.row(j).dot(f.beta);
      rss += e(i, j) * r * r;
    }
  f.sigma2 = rss / static_cast<double>(n);
  return f;
}

PoissonFit n2_minimizer_poisson(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& e) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Eigen::VectorXd th = Eigen::VectorXd::Zero(d + 1);
  auto feature = [&](Eigen::Index j) {
    Eigen::VectorXd a(d + 1);
    a << 1.0, x.row(j).transpose();
    return a;
  };
  auto objective = [&](const Eigen::VectorXd& t) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double eta = feature(j).dot(t);
        s += e(i, j) * (std::exp(eta) - y(i) * eta);
      }
    return s;
  };
  double f = objective(th);
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd a = feature(j);
        const double mu = std::exp(a.dot(th));
        g += e(i, j) * (mu - y(i)) * a;
        h += e(i, j) * mu * a * a.transpose();
      }
    if (g.norm() < 1e-11) break;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    double t = 1.0;
    while (t > 1e-12) {
      const Eigen::VectorXd cand = th - t * step;
      const double cf = objective(cand);
      if (cf <= f) {
        th = cand;
        f = cf;
        break;
      }
      t *= 0.5;
    }
    if (t <= 1e-12) break;
  }
  return PoissonFit{th.tail(d), th(0)};
}

MvnFit n2_minimizer_mvn(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& e) {
  const Eigen::Index n = x.rows(), p = x.cols(), q = y.cols();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p + q);
  Eigen::VectorXd z(p + q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      z << x.row(j).transpose(), y.row(i).transpose();
      mean += e(i, j) / nd * z;
    }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p + q, p + q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      z << x.row(j).transpose(), y.row(i).transpose();
      z -= mean;
      cov += e(i, j) / nd * z * z.transpose();
    }
  return MvnFit{mean, cov.inverse()};
}

Eigen::MatrixXd dense_block_q(std::size_t n, std::size_t blocks, double alpha) {
  const std::size_t nb = n / blocks;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i / nb != j / nb) continue;
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          i == j ? 1.0 - alpha : alpha / static_cast<double>(nb - 1);
    }
  return q;
}

Eigen::MatrixXd loop_moving_average(const Eigen::MatrixXd& m, std::size_t r) {
  const auto n = static_cast<long>(m.rows());
  const long before = static_cast<long>(r / 2);
  const long after = static_cast<long>(r % 2 == 1 ? r / 2 : r / 2 - 1);
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (long i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double s = 0.0;
      int count = 0;
      for (long k = i - before; k <= i + after; ++k) {
        if (k < 0 || k >= n) continue;
        s += m(k, c);
        ++count;
      }
      out(i, c) = s / count;
    }
  return out;
}

Eigen::MatrixXd correlation_of(const Eigen::MatrixXd& precision) {
  const Eigen::MatrixXd cov = precision.inverse();
  Eigen::MatrixXd c(cov.rows(), cov.cols());
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    for (Eigen::Index j = 0; j < cov.cols(); ++j) c(i, j) = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
  return c;
}

ConjugatePosterior conjugate_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.rows()), d = static_cast<double>(x.cols());
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::MatrixXd inv = xtx.inverse();
  ConjugatePosterior post;
  post.mean = inv * (x.transpose() * y);
  post.nu = n - d;
  const double s2 = (y - x * post.mean).squaredNorm() / post.nu;
  post.covariance = post.nu / (post.nu - 2.0) * s2 * inv;
  post.sigma2_mean = post.nu * s2 / (post.nu - 2.0);
  return post;
}

}  // namespace oracle
