#include "shuffleprior/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shuffleprior/errors.hpp"
#include "shuffleprior/permutation.hpp"

namespace shuffleprior {

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

Eigen::MatrixXd apply_blocks(const ExchangeableBlocks& e, const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  contiguous_blocks(n, e.blocks);  // validates divisibility
  const auto nb = static_cast<Eigen::Index>(n / e.blocks);
  if (nb < 2) return m;
  const double off = e.alpha / static_cast<double>(nb - 1);
  const double diag = 1.0 - e.alpha - off;
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t b = 0; b < e.blocks; ++b) {
    const auto start = static_cast<Eigen::Index>(b) * nb;
    const Eigen::RowVectorXd total = m.middleRows(start, nb).colwise().sum();
    out.middleRows(start, nb) = diag * m.middleRows(start, nb);
    out.middleRows(start, nb).rowwise() += off * total;
  }
  return out;
}

}  // namespace

void LLSpec::validate(std::size_t n) const {
  if (const auto* d = std::get_if<DenseQ>(&form)) {
    const auto& q = d->q;
    if (static_cast<std::size_t>(q.rows()) != n || q.cols() != q.rows())
      throw std::invalid_argument("LLSpec: Q must be n x n");
    if ((q.array() < 0.0).any()) throw std::invalid_argument("LLSpec: Q has negative entries");
    if ((q.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-8 ||
        (q.colwise().sum().array() - 1.0).abs().maxCoeff() > 1e-8)
      throw std::invalid_argument("LLSpec: Q is not doubly stochastic");
  } else {
    const auto& e = std::get<ExchangeableBlocks>(form);
    contiguous_blocks(n, e.blocks);
    if (e.alpha < 0.0 || e.alpha > 1.0) throw std::invalid_argument("LLSpec: alpha must lie in [0, 1]");
    if (n / e.blocks < 2 && e.alpha > 0.0) throw std::invalid_argument("LLSpec: singleton blocks admit no mismatch");
  }
}

Eigen::MatrixXd LLSpec::apply(const Eigen::MatrixXd& m) const {
  if (const auto* d = std::get_if<DenseQ>(&form)) return d->q * m;
  return apply_blocks(std::get<ExchangeableBlocks>(form), m);
}

Eigen::MatrixXd LLSpec::apply_transpose(const Eigen::MatrixXd& m) const {
  if (const auto* d = std::get_if<DenseQ>(&form)) return d->q.transpose() * m;
  return apply_blocks(std::get<ExchangeableBlocks>(form), m);  // symmetric
}

Eigen::MatrixXd LLSpec::dense(std::size_t n) const {
  return apply(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

Eigen::VectorXd ll_fit_lr(const LinkedDataset& data, const LLSpec& q) {
  data.validate();
  q.validate(data.n());
  if (data.y.cols() != 1) throw std::invalid_argument("ll_fit_lr: a single response column is required");
  return least_squares(q.apply(data.x), data.y).col(0);
}

LLMvnResult ll_fit_mvn(const LinkedDataset& data, const LLSpec& q) {
  data.validate();
  q.validate(data.n());
  const ReducedStats stats{q.apply_transpose(data.y), 1};
  try {
    return LLMvnResult{std::get<MvnParams>(mstep(ModelKind::mvn, data, stats)), false};
  } catch (const SingularSystem&) {
  }
  // eigenvalue floor on the modified covariance
  const Eigen::Index p = data.x.cols(), qd = data.y.cols();
  const double n = static_cast<double>(data.n());
  const Eigen::RowVectorXd mx = data.x.colwise().mean(), my = data.y.colwise().mean();
  const Eigen::MatrixXd xc = data.x.rowwise() - mx, yc = data.y.rowwise() - my, tc = stats.pty.rowwise() - my;
  Eigen::MatrixXd s(p + qd, p + qd);
  s.topLeftCorner(p, p) = xc.transpose() * xc / n;
  s.bottomRightCorner(qd, qd) = yc.transpose() * yc / n;
  s.topRightCorner(p, qd) = xc.transpose() * tc / n;
  s.bottomLeftCorner(qd, p) = s.topRightCorner(p, qd).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(1e-8);
  MvnParams out;
  out.mean.resize(p + qd);
  out.mean << mx.transpose(), my.transpose();
  out.precision = eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return LLMvnResult{std::move(out), true};
}

Eigen::MatrixXd sliding_window_average(const Eigen::MatrixXd& m, std::size_t r) {
  if (r < 1) throw std::invalid_argument("sliding_window_average: window must be at least 1");
  const Eigen::Index n = m.rows();
  const auto before = static_cast<Eigen::Index>(r % 2 ? (r - 1) / 2 : r / 2);
  const auto after = static_cast<Eigen::Index>(r % 2 ? (r - 1) / 2 : r / 2 - 1);
  Eigen::MatrixXd out(n, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - before);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + after);
    out.row(i) = m.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

ModelParams averaging_fit(const LinkedDataset& data, std::size_t r, ModelKind kind) {
  if (kind == ModelKind::poisson) throw std::invalid_argument("averaging_fit: supports LR and MVN only");
  if (r == 1) return naive_fit(kind, data);
  return naive_fit(kind, LinkedDataset{sliding_window_average(data.x, r), sliding_window_average(data.y, r)});
}

Eigen::VectorXd huber_fit_lr(const LinkedDataset& data, const HuberOptions& opt) {
  data.validate();
  if (data.y.cols() != 1) throw std::invalid_argument("huber_fit_lr: a single response column is required");
  const Eigen::VectorXd y = data.y.col(0);
  Eigen::VectorXd beta = least_squares(data.x, data.y).col(0);

  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd r = y - data.x * beta;
    std::vector<double> res(r.data(), r.data() + r.size());
    const double med = median(res);
    for (auto& v : res) v = std::abs(v - med);
    const double scale = median(res) / 0.6745;
    if (!(scale > 0.0)) return beta;

    const Eigen::VectorXd w = (opt.c * scale / r.array().abs()).min(1.0).matrix();
    const Eigen::VectorXd sw = w.array().sqrt();
    const Eigen::VectorXd next = least_squares(sw.asDiagonal() * data.x, (sw.array() * y.array()).matrix()).col(0);
    const double change = (next - beta).norm();
    beta = next;
    if (change <= opt.tolerance * std::max(1.0, beta.norm())) return beta;
  }
  throw ConvergenceFailure("huber_fit_lr: IRLS did not converge");
}

}  // namespace shuffleprior
