#include "shuffleprior/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "shuffleprior/errors.hpp"
#include "shuffleprior/mcmc.hpp"

namespace shuffleprior {

namespace {

Eigen::Index idx(std::size_t k) { return static_cast<Eigen::Index>(k); }

struct Component {
  Eigen::VectorXd beta_tilde;
  double s2 = 0.0;
};

// beta~ = (X^T X)^{-1} X^T Pi^T Y and s2 = ||Y - Pi X beta~||^2 / (n - d)
Component component_for(const LinkedDataset& data, const Eigen::LLT<Eigen::MatrixXd>& gram,
                        std::span<const std::size_t> t) {
  const Eigen::Index n = data.x.rows(), d = data.x.cols();
  Eigen::VectorXd pty(n);
  for (std::size_t i = 0; i < t.size(); ++i) pty(idx(t[i])) = data.y(idx(i), 0);
  Component c;
  c.beta_tilde = gram.solve(data.x.transpose() * pty);
  const Eigen::VectorXd fit = data.x * c.beta_tilde;
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = data.y(idx(i), 0) - fit(idx(t[i]));
    rss += r * r;
  }
  c.s2 = rss / static_cast<double>(n - d);
  return c;
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

nlohmann::json to_json(const ParameterSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"q05", s.q05}, {"q95", s.q95}};
}

}  // namespace

void DaConfig::validate() const {
  if (outer_iterations < 1) throw std::invalid_argument("DaConfig: at least one outer iteration is required");
  if (augmentation_draws < 1) throw std::invalid_argument("DaConfig: at least one augmentation draw is required");
  if (thinning < 1) throw std::invalid_argument("DaConfig: thinning must be at least 1");
}

DaResult run_data_augmentation(const LinkedDataset& data, const DaConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.y.cols() != 1) throw std::invalid_argument("run_data_augmentation: a single response column is required");
  const std::size_t n = data.n();
  const auto d = static_cast<std::size_t>(data.x.cols());
  if (n <= d) throw std::invalid_argument("run_data_augmentation: need n > d");

  const Eigen::MatrixXd xtx = data.x.transpose() * data.x;
  Eigen::LLT<Eigen::MatrixXd> gram(xtx);
  if (gram.info() != Eigen::Success) throw SingularSystem("run_data_augmentation: X^T X is singular");
  const Eigen::MatrixXd upper = gram.matrixU();  // X^T X = U^T U

  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(static_cast<double>(n - d));
  const double nu = static_cast<double>(n - d);

  auto draw_beta = [&](const Component& c, double sigma2) {
    Eigen::VectorXd z(idx(d));
    for (auto& v : z) v = normal(rng);
    // U^{-1} z has covariance (X^T X)^{-1}
    return Eigen::VectorXd(c.beta_tilde + std::sqrt(sigma2) * upper.triangularView<Eigen::Upper>().solve(z));
  };
  auto draw_sigma2 = [&](const Component& c) { return nu * c.s2 / chi2(rng); };
  auto pick = [&](std::size_t count) { return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng); };

  Permutation state = cfg.fixed_permutation ? *cfg.fixed_permutation : Permutation::identity(n);
  if (state.size() != n) throw std::invalid_argument("run_data_augmentation: fixed permutation has the wrong size");

  // start from the posterior step with a single component
  std::vector<Component> comps{component_for(data, gram, state.targets())};
  double sigma2 = comps.front().s2;
  Eigen::VectorXd beta = draw_beta(comps.front(), sigma2);
  sigma2 = draw_sigma2(comps.front());

  DaResult out{Eigen::MatrixXd(idx(cfg.outer_iterations), idx(d)), Eigen::VectorXd(idx(cfg.outer_iterations)), 0.0,
               state};
  double acceptance = 0.0;

  for (std::size_t k = 0; k < cfg.outer_iterations; ++k) {
    if (!cfg.fixed_permutation) {
      comps.clear();
      ChainConfig cc;
      cc.steps = cfg.augmentation_draws * cfg.thinning;
      cc.burn_in = 0;
      cc.seed = derive_seed(cfg.seed, k);
      cc.init = ChainInit::warm_start;
      cc.warm_start = state;
      cc.refresh_every = 0;
      cc.on_retained = [&](std::size_t step, std::span<const std::size_t> t) {
        if (step % cfg.thinning == 0) comps.push_back(component_for(data, gram, t));
      };
      const ChainResult chain = run_chain(data, LinearParams{beta, sigma2}, cfg.prior, cc);
      state = chain.last_state;
      acceptance += chain.acceptance_rate;
    }
    beta = draw_beta(comps[pick(comps.size())], sigma2);
    sigma2 = draw_sigma2(comps[pick(comps.size())]);
    if (!(sigma2 > 0.0)) throw std::logic_error("run_data_augmentation: non-positive variance draw");
    out.beta_draws.row(idx(k)) = beta.transpose();
    out.sigma2_draws(idx(k)) = sigma2;
  }
  out.acceptance_rate = cfg.fixed_permutation ? 0.0 : acceptance / static_cast<double>(cfg.outer_iterations);
  out.last_state = std::move(state);
  return out;
}

ParameterSummary summarize(const Eigen::VectorXd& draws) {
  if (draws.size() == 0) throw std::invalid_argument("summarize: no draws");
  ParameterSummary s;
  s.mean = draws.mean();
  s.sd = draws.size() > 1 ? std::sqrt((draws.array() - s.mean).square().sum() / static_cast<double>(draws.size() - 1)) : 0.0;
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  s.q05 = quantile(v, 0.05);
  s.q95 = quantile(v, 0.95);
  return s;
}

void write_draws_csv(std::ostream& os, const DaResult& result) {
  for (Eigen::Index k = 0; k < result.beta_draws.cols(); ++k) os << "beta" << (k + 1) << ',';
  os << "sigma2\n";
  os.precision(17);
  for (Eigen::Index r = 0; r < result.beta_draws.rows(); ++r) {
    for (Eigen::Index k = 0; k < result.beta_draws.cols(); ++k) os << result.beta_draws(r, k) << ',';
    os << result.sigma2_draws(r) << '\n';
  }
}

void write_summary_json(std::ostream& os, const DaResult& result) {
  nlohmann::json j;
  j["draws"] = result.sigma2_draws.size();
  j["acceptance_rate"] = result.acceptance_rate;
  j["beta"] = nlohmann::json::array();
  for (Eigen::Index k = 0; k < result.beta_draws.cols(); ++k)
    j["beta"].push_back(to_json(summarize(result.beta_draws.col(k))));
  j["sigma2"] = to_json(summarize(result.sigma2_draws));
  os << j.dump(2) << '\n';
}

}  // namespace shuffleprior
