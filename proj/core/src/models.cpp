#include "shuffleprior/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "shuffleprior/errors.hpp"

namespace shuffleprior {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

void check_stats(const LinkedDataset& data, const ReducedStats& stats) {
  if (stats.pty.rows() != data.y.rows() || stats.pty.cols() != data.y.cols())
    throw std::invalid_argument("mstep: statistic shape differs from the response matrix");
}

double sigma2_floor(const Eigen::MatrixXd& y) {
  return 1e-14 * (y.squaredNorm() / static_cast<double>(y.rows())) + std::numeric_limits<double>::min();
}

LinearParams mstep_linear(const LinkedDataset& data, const ReducedStats& stats) {
  if (data.y.cols() != 1) throw std::invalid_argument("mstep: linear model needs a single response column");
  const double n = static_cast<double>(data.n());
  LinearParams out;
  out.beta = least_squares(data.x, stats.pty).col(0);
  const Eigen::VectorXd fit = data.x * out.beta;
  const double s2 = (data.y.squaredNorm() - 2.0 * stats.pty.col(0).dot(fit) + fit.squaredNorm()) / n;
  out.sigma2 = std::max(s2, sigma2_floor(data.y));
  return out;
}

// f(theta) = <t, eta> - sum exp(eta); -inf when exp overflows
double poisson_objective(const Eigen::VectorXd& t, const Eigen::VectorXd& eta) {
  if (eta.maxCoeff() > 700.0) return -std::numeric_limits<double>::infinity();
  return t.dot(eta) - eta.array().exp().sum();
}

PoissonParams mstep_poisson(const LinkedDataset& data, const ReducedStats& stats, const ModelParams* warm,
                            MstepInfo* info) {
  if (data.y.cols() != 1) throw std::invalid_argument("mstep: Poisson model needs a single response column");
  const Eigen::Index n = data.x.rows(), d = data.x.cols();
  Eigen::MatrixXd a(n, d + 1);
  a.col(0).setOnes();
  a.rightCols(d) = data.x;
  const Eigen::VectorXd t = stats.pty.col(0);
  if ((t.array() < 0.0).any()) throw std::invalid_argument("mstep: Poisson responses must be non-negative");

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  if (const auto* w = warm ? std::get_if<PoissonParams>(warm) : nullptr; w && w->beta.size() == d) {
    theta(0) = w->intercept;
    theta.tail(d) = w->beta;
  } else {
    theta(0) = std::log(std::max(t.mean(), 1e-8));
  }

  Eigen::VectorXd eta = a * theta;
  double f = poisson_objective(t, eta);
  if (!std::isfinite(f)) {
    theta.setZero();
    theta(0) = std::log(std::max(t.mean(), 1e-8));
    eta = a * theta;
    f = poisson_objective(t, eta);
  }
  const Eigen::VectorXd row_norms = a.rowwise().norm();

  const int max_iter = 100;
  double last_tiny_gnorm = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd grad = a.transpose() * (t - mu);
    const double gnorm = grad.norm();
    // gradient noise floor from rounding in the sums
    const double attainable = 64.0 * std::numeric_limits<double>::epsilon() *
                              row_norms.dot((t.array().abs() + mu.array()).matrix());
    if (info) {
      info->newton_iterations = it;
      info->gradient_norm = gnorm;
    }
    if (gnorm < 1e-8 || gnorm <= attainable) break;
    if (it == max_iter) throw ConvergenceFailure("mstep: Poisson Newton iteration did not converge");

    const Eigen::MatrixXd h = a.transpose() * mu.asDiagonal() * a;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw SingularSystem("mstep: Poisson Hessian is singular");
    const Eigen::VectorXd step = ldlt.solve(grad);

    // near the optimum the predicted gain is below the resolution of f, so the
    // line search cannot see progress; take plain Newton steps while the gradient shrinks
    const double decrement = grad.dot(step);
    if (decrement <= 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f))) {
      if (gnorm >= last_tiny_gnorm) break;
      last_tiny_gnorm = gnorm;
      theta += step;
      eta = a * theta;
      f = poisson_objective(t, eta);
      continue;
    }

    double scale = 1.0;
    bool moved = false;
    for (int halving = 0; halving <= 50; ++halving, scale *= 0.5) {
      const Eigen::VectorXd cand = theta + scale * step;
      const Eigen::VectorXd cand_eta = a * cand;
      const double cf = poisson_objective(t, cand_eta);
      if (cf >= f) {
        theta = cand;
        eta = cand_eta;
        f = cf;
        moved = true;
        break;
      }
    }
    if (!moved) {
      if (gnorm <= 1e3 * attainable) break;
      throw ConvergenceFailure("mstep: Poisson step halving failed after 50 halvings");
    }
  }
  return PoissonParams{theta.tail(d), theta(0)};
}

MvnParams mstep_mvn(const LinkedDataset& data, const ReducedStats& stats, MstepInfo* info) {
  const Eigen::Index n = data.x.rows(), p = data.x.cols(), q = data.y.cols();
  const double nd = static_cast<double>(n);
  const Eigen::RowVectorXd mx = data.x.colwise().mean();
  const Eigen::RowVectorXd my = data.y.colwise().mean();
  const Eigen::MatrixXd xc = data.x.rowwise() - mx;
  const Eigen::MatrixXd yc = data.y.rowwise() - my;
  const Eigen::MatrixXd tc = stats.pty.rowwise() - my;

  Eigen::MatrixXd s(p + q, p + q);
  s.topLeftCorner(p, p) = xc.transpose() * xc / nd;
  s.bottomRightCorner(q, q) = yc.transpose() * yc / nd;
  s.topRightCorner(p, q) = xc.transpose() * tc / nd;
  s.bottomLeftCorner(q, p) = s.topRightCorner(p, q).transpose();

  MvnParams out;
  out.mean.resize(p + q);
  out.mean << mx.transpose(), my.transpose();

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p + q, p + q);
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    llt.compute(s + 1e-10 * std::max(1.0, s.trace() / static_cast<double>(p + q)) * eye);
    if (llt.info() != Eigen::Success) throw SingularSystem("mstep: sample covariance is not positive definite");
    if (info) info->ridge_added = true;
  }
  out.precision = llt.solve(eye);
  out.precision = 0.5 * (out.precision + out.precision.transpose()).eval();
  return out;
}

}  // namespace

void LinkedDataset::validate() const {
  if (x.rows() == 0 || x.rows() != y.rows())
    throw std::invalid_argument("LinkedDataset: X and Y must have the same positive number of rows");
  if (x.cols() == 0 || y.cols() == 0) throw std::invalid_argument("LinkedDataset: X and Y need at least one column");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("LinkedDataset: non-finite values");
}

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::linear: return "lr";
    case ModelKind::poisson: return "poisson";
    default: return "mvn";
  }
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "lr" || name == "linear") return ModelKind::linear;
  if (name == "poisson" || name == "glm") return ModelKind::poisson;
  if (name == "mvn") return ModelKind::mvn;
  throw std::invalid_argument("unknown model '" + name + "' (expected lr, poisson or mvn)");
}

ModelKind kind_of(const ModelParams& p) noexcept {
  return static_cast<ModelKind>(p.index());
}

Eigen::VectorXd flatten(const ModelParams& p) {
  return std::visit(
      [](const auto& th) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(th)>;
        Eigen::VectorXd out;
        if constexpr (std::is_same_v<T, LinearParams>) {
          out.resize(th.beta.size() + 1);
          out << th.beta, th.sigma2;
        } else if constexpr (std::is_same_v<T, PoissonParams>) {
          out.resize(th.beta.size() + 1);
          out << th.intercept, th.beta;
        } else {
          out.resize(th.mean.size() + th.precision.size());
          out << th.mean, th.precision.reshaped();
        }
        return out;
      },
      p);
}

Eigen::MatrixXd ReducedStats::xpty(const Eigen::MatrixXd& x) const {
  return x.transpose() * pty / static_cast<double>(x.rows());
}

ReducedStats stats_from_permutation(const Eigen::MatrixXd& y, const Permutation& p) {
  if (p.size() != static_cast<std::size_t>(y.rows())) throw std::invalid_argument("stats_from_permutation: size mismatch");
  ReducedStats s{Eigen::MatrixXd(y.rows(), y.cols()), 1};
  for (std::size_t i = 0; i < p.size(); ++i) s.pty.row(idx(p[i])) = y.row(idx(i));
  return s;
}

double pair_loglik(const ModelParams& theta, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  return std::visit(
      [&](const auto& th) -> double {
        using T = std::decay_t<decltype(th)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          if (x.size() != th.beta.size() || y.size() != 1) throw std::invalid_argument("pair_loglik: dimension mismatch");
          const double r = y(0) - x.dot(th.beta);
          return -0.5 * (kLog2Pi + std::log(th.sigma2)) - r * r / (2.0 * th.sigma2);
        } else if constexpr (std::is_same_v<T, PoissonParams>) {
          if (x.size() != th.beta.size() || y.size() != 1) throw std::invalid_argument("pair_loglik: dimension mismatch");
          const double eta = x.dot(th.beta) + th.intercept;
          return y(0) * eta - std::exp(eta) - std::lgamma(y(0) + 1.0);
        } else {
          const Eigen::Index dim = x.size() + y.size();
          if (th.mean.size() != dim || th.precision.rows() != dim) throw std::invalid_argument("pair_loglik: dimension mismatch");
          Eigen::LLT<Eigen::MatrixXd> llt(th.precision);
          if (llt.info() != Eigen::Success) throw std::domain_error("pair_loglik: precision is not positive definite");
          Eigen::VectorXd z(dim);
          z << x, y;
          z -= th.mean;
          const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
          return 0.5 * logdet - 0.5 * z.dot(th.precision * z) - 0.5 * static_cast<double>(dim) * kLog2Pi;
        }
      },
      theta);
}

PairLikelihood::PairLikelihood(const LinkedDataset& data, const ModelParams& theta)
    : kind_(kind_of(theta)), n_(data.n()) {
  const Eigen::Index n = data.x.rows();
  std::visit(
      [&](const auto& th) {
        using T = std::decay_t<decltype(th)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          if (data.x.cols() != th.beta.size() || data.y.cols() != 1)
            throw std::invalid_argument("PairLikelihood: dimension mismatch");
          const Eigen::VectorXd eta = data.x * th.beta;
          eta_.assign(eta.data(), eta.data() + n);
          y0_.assign(data.y.data(), data.y.data() + n);
          constant_ = -0.5 * (kLog2Pi + std::log(th.sigma2));
          half_inv_var_ = 0.5 / th.sigma2;
        } else if constexpr (std::is_same_v<T, PoissonParams>) {
          if (data.x.cols() != th.beta.size() || data.y.cols() != 1)
            throw std::invalid_argument("PairLikelihood: dimension mismatch");
          const Eigen::VectorXd eta = (data.x * th.beta).array() + th.intercept;
          eta_.assign(eta.data(), eta.data() + n);
          y0_.assign(data.y.data(), data.y.data() + n);
          exp_eta_.resize(n_);
          log_fact_.resize(n_);
          for (std::size_t k = 0; k < n_; ++k) {
            exp_eta_[k] = std::exp(eta_[k]);
            log_fact_[k] = std::lgamma(y0_[k] + 1.0);
          }
        } else {
          const Eigen::Index p = data.x.cols(), q = data.y.cols();
          if (th.mean.size() != p + q || th.precision.rows() != p + q)
            throw std::invalid_argument("PairLikelihood: dimension mismatch");
          Eigen::LLT<Eigen::MatrixXd> llt(th.precision);
          if (llt.info() != Eigen::Success) throw std::domain_error("PairLikelihood: precision is not positive definite");
          const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
          constant_ = 0.5 * logdet - 0.5 * static_cast<double>(p + q) * kLog2Pi;
          const Eigen::MatrixXd xc = data.x.rowwise() - th.mean.head(p).transpose();
          yc_ = data.y.rowwise() - th.mean.tail(q).transpose();
          const Eigen::MatrixXd oxx = th.precision.topLeftCorner(p, p);
          const Eigen::MatrixXd oyy = th.precision.bottomRightCorner(q, q);
          const Eigen::MatrixXd oxy = th.precision.topRightCorner(p, q);
          a_.resize(n_);
          b_.resize(n_);
          const Eigen::VectorXd av = (xc * oxx).cwiseProduct(xc).rowwise().sum();
          const Eigen::VectorXd bv = (yc_ * oyy).cwiseProduct(yc_).rowwise().sum();
          for (std::size_t k = 0; k < n_; ++k) {
            a_[k] = av(idx(k));
            b_[k] = bv(idx(k));
          }
          w_ = xc * oxy;
        }
      },
      theta);
}

Eigen::MatrixXd PairLikelihood::matrix() const {
  Eigen::MatrixXd out(idx(n_), idx(n_));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out(idx(i), idx(j)) = (*this)(i, j);
  return out;
}

double PairLikelihood::total(const Permutation& p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, p[i]);
  return s;
}

Eigen::MatrixXd least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) throw SingularSystem("least_squares: design matrix is rank deficient");
  return qr.solve(b);
}

ModelParams mstep(ModelKind kind, const LinkedDataset& data, const ReducedStats& stats, const ModelParams* warm,
                  MstepInfo* info) {
  check_stats(data, stats);
  switch (kind) {
    case ModelKind::linear: return mstep_linear(data, stats);
    case ModelKind::poisson: return mstep_poisson(data, stats, warm, info);
    default: return mstep_mvn(data, stats, info);
  }
}

ModelParams naive_fit(ModelKind kind, const LinkedDataset& data) {
  return mstep(kind, data, ReducedStats{data.y, 1});
}

ModelParams oracle_fit(ModelKind kind, const LinkedDataset& data, const Permutation& pi_star) {
  return mstep(kind, data, stats_from_permutation(data.y, pi_star));
}

double reduced_objective(const LinkedDataset& data, const ModelParams& theta, const ReducedStats& stats) {
  check_stats(data, stats);
  const double n = static_cast<double>(data.n());
  return std::visit(
      [&](const auto& th) -> double {
        using T = std::decay_t<decltype(th)>;
        if constexpr (std::is_same_v<T, LinearParams>) {
          const Eigen::VectorXd fit = data.x * th.beta;
          const double rss = data.y.squaredNorm() - 2.0 * stats.pty.col(0).dot(fit) + fit.squaredNorm();
          return 0.5 * n * (kLog2Pi + std::log(th.sigma2)) + rss / (2.0 * th.sigma2);
        } else if constexpr (std::is_same_v<T, PoissonParams>) {
          const Eigen::VectorXd eta = (data.x * th.beta).array() + th.intercept;
          double log_fact = 0.0;
          for (Eigen::Index i = 0; i < data.y.rows(); ++i) log_fact += std::lgamma(data.y(i, 0) + 1.0);
          return -stats.pty.col(0).dot(eta) + eta.array().exp().sum() + log_fact;
        } else {
          const Eigen::Index p = data.x.cols(), q = data.y.cols();
          const Eigen::MatrixXd xc = data.x.rowwise() - th.mean.head(p).transpose();
          const Eigen::MatrixXd yc = data.y.rowwise() - th.mean.tail(q).transpose();
          const Eigen::MatrixXd tc = stats.pty.rowwise() - th.mean.tail(q).transpose();
          Eigen::MatrixXd s(p + q, p + q);
          s.topLeftCorner(p, p) = xc.transpose() * xc / n;
          s.bottomRightCorner(q, q) = yc.transpose() * yc / n;
          s.topRightCorner(p, q) = xc.transpose() * tc / n;
          s.bottomLeftCorner(q, p) = s.topRightCorner(p, q).transpose();
          Eigen::LLT<Eigen::MatrixXd> llt(th.precision);
          if (llt.info() != Eigen::Success) throw std::domain_error("reduced_objective: precision is not positive definite");
          const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
          return 0.5 * n * (-logdet + (th.precision * s).trace() + static_cast<double>(p + q) * kLog2Pi);
        }
      },
      theta);
}

}  // namespace shuffleprior
