#include "shuffleprior/synthgen.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace shuffleprior {

namespace {

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // fill row by row so the stream order does not depend on storage order
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Eigen::VectorXd on_sphere(std::size_t d, double radius, Rng& rng) {
  Eigen::VectorXd v = gaussian(idx(d), 1, rng).col(0);
  double norm = v.norm();
  while (norm == 0.0) {
    v = gaussian(idx(d), 1, rng).col(0);
    norm = v.norm();
  }
  return radius * v / norm;
}

Eigen::MatrixXd mvn_covariance(const MvnScenario& m) {
  const auto dim = idx(m.p + m.q);
  return (m.tau - m.rho) * Eigen::MatrixXd::Identity(dim, dim) + m.rho * Eigen::MatrixXd::Ones(dim, dim);
}

}  // namespace

void ScenarioSpec::validate() const {
  constraint.validate();
  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MvnScenario>) {
          if (m.p == 0 || m.q == 0) throw std::invalid_argument("ScenarioSpec: MVN needs p, q >= 1");
          Eigen::LLT<Eigen::MatrixXd> llt(mvn_covariance(m));
          if (llt.info() != Eigen::Success) throw std::invalid_argument("ScenarioSpec: MVN covariance is not SPD");
        } else {
          if (!(m.beta_norm > 0.0)) throw std::invalid_argument("ScenarioSpec: beta norm must be positive");
          if (m.d == 0 || m.d >= constraint.n) throw std::invalid_argument("ScenarioSpec: need 1 <= d < n");
          if constexpr (std::is_same_v<T, LinearScenario>) {
            if (m.sigma < 0.0) throw std::invalid_argument("ScenarioSpec: sigma must be non-negative");
            if (m.intercept && m.d < 2) throw std::invalid_argument("ScenarioSpec: intercept needs d >= 2");
          }
        }
      },
      model);
}

Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n();
  Rng rng(spec.seed);
  Permutation pi = sample_constrained(spec.constraint, rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  return std::visit(
      [&](const auto& m) -> Scenario {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearScenario>) {
          Eigen::MatrixXd x = gaussian(idx(n), idx(m.d), rng);
          if (m.intercept) x.col(0).setOnes();
          const Eigen::VectorXd beta = on_sphere(m.d, m.beta_norm, rng);
          const Eigen::VectorXd mu = x * beta;
          Eigen::MatrixXd y(idx(n), 1);
          for (std::size_t i = 0; i < n; ++i) y(idx(i), 0) = mu(idx(pi[i])) + m.sigma * normal(rng);
          return Scenario{LinkedDataset{std::move(x), std::move(y)}, std::move(pi),
                          LinearParams{beta, m.sigma * m.sigma}, 0};
        } else if constexpr (std::is_same_v<T, PoissonScenario>) {
          Eigen::MatrixXd x = gaussian(idx(n), idx(m.d), rng);
          const Eigen::VectorXd beta = on_sphere(m.d, m.beta_norm, rng);
          const double beta0 = normal(rng);
          const Eigen::VectorXd eta = (x * beta).array() + beta0;
          Eigen::MatrixXd y(idx(n), 1);
          std::size_t clipped = 0;
          for (std::size_t i = 0; i < n; ++i) {
            double e = eta(idx(pi[i]));
            if (e > 20.0) {
              e = 20.0;
              ++clipped;
            }
            y(idx(i), 0) = static_cast<double>(std::poisson_distribution<long long>(std::exp(e))(rng));
          }
          return Scenario{LinkedDataset{std::move(x), std::move(y)}, std::move(pi), PoissonParams{beta, beta0},
                          clipped};
        } else {
          const Eigen::MatrixXd cov = mvn_covariance(m);
          const Eigen::MatrixXd l = cov.llt().matrixL();
          const auto p = idx(m.p), q = idx(m.q);
          const Eigen::MatrixXd z = gaussian(idx(n), p + q, rng) * l.transpose();
          Eigen::MatrixXd x(idx(n), p), y(idx(n), q);
          for (std::size_t i = 0; i < n; ++i) {
            x.row(idx(pi[i])) = z.row(idx(i)).head(p);
            y.row(idx(i)) = z.row(idx(i)).tail(q);
          }
          MvnParams truth{Eigen::VectorXd::Zero(p + q), cov.inverse()};
          return Scenario{LinkedDataset{std::move(x), std::move(y)}, std::move(pi), std::move(truth), 0};
        }
      },
      spec.model);
}

LinkedDataset unshuffle(const LinkedDataset& data, const Permutation& pi_star) {
  if (pi_star.size() != data.n()) throw std::invalid_argument("unshuffle: size mismatch");
  LinkedDataset out{Eigen::MatrixXd(data.x.rows(), data.x.cols()), data.y};
  for (std::size_t i = 0; i < data.n(); ++i) out.x.row(idx(i)) = data.x.row(idx(pi_star[i]));
  return out;
}

double relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("relative_error: size mismatch");
  const double norm = truth.norm();
  if (norm == 0.0) throw std::invalid_argument("relative_error: truth has zero norm");
  return (estimate - truth).norm() / norm;
}

Eigen::MatrixXd correlation_from_precision(const Eigen::MatrixXd& precision) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("correlation_from_precision: precision is not SPD");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
  const Eigen::VectorXd inv_sd = cov.diagonal().array().rsqrt();
  return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

double correlation_error(const Eigen::MatrixXd& precision_est, const Eigen::MatrixXd& precision_true) {
  return (correlation_from_precision(precision_est) - correlation_from_precision(precision_true)).norm();
}

double ree(const ModelParams& estimate, const ModelParams& truth) {
  if (estimate.index() != truth.index()) throw std::invalid_argument("ree: model kinds differ");
  return std::visit(
      [&](const auto& est) -> double {
        using T = std::decay_t<decltype(est)>;
        const auto& tr = std::get<T>(truth);
        if constexpr (std::is_same_v<T, MvnParams>) return correlation_error(est.precision, tr.precision);
        else return relative_error(est.beta, tr.beta);
      },
      estimate);
}

}  // namespace shuffleprior
