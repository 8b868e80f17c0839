#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shuffleprior/synthgen.hpp"

namespace shuffleprior {

enum class Method { naive, oracle, em, emh, eml, emb, ll, averaging, huber, da };

const char* to_string(Method m) noexcept;
Method parse_method(const std::string& name);

enum class ConstraintFamily { sparse, banded, sparse_block };

const char* to_string(ConstraintFamily f) noexcept;
ConstraintFamily parse_constraint_family(const std::string& name);

struct RunConfig {
  ModelScenario model = LinearScenario{};
  ConstraintFamily family = ConstraintFamily::sparse;
  /// Mismatch rates (k/n or k*B/n) for sparse families, bandwidths for banded.
  std::vector<double> levels{0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  std::size_t n = 1000;
  std::size_t blocks = 50;
  std::vector<Method> methods{Method::naive, Method::oracle, Method::em, Method::emh};
  std::size_t replications = 20;
  std::uint64_t seed_base = 1;

  std::size_t em_iterations = 400;
  std::size_t mcmc_steps = 8000;
  std::size_t burn_in = 4000;
  std::optional<double> gamma;  // default: log n (sparse, block) or 1 (banded)
  std::size_t da_outer = 1000;
  bool timing = false;     // add wall-clock columns (breaks byte-identical output)
  std::size_t threads = 0;  // 0: SHUFFLEPRIOR_THREADS or hardware concurrency

  /// Throws std::invalid_argument on incompatible method/scenario combinations.
  void validate() const;
};

struct RunRecord {
  std::size_t cell = 0;
  double level = 0.0;
  std::size_t replication = 0;
  Method method = Method::naive;
  double ree = 0.0;
  double acceptance_rate = 0.0;
  std::size_t invalid_steps = 0;
  std::size_t em_iterations = 0;
  double wall_seconds = 0.0;
  std::string status = "ok";
};

struct SummaryRow {
  double level = 0.0;
  Method method = Method::naive;
  std::size_t count = 0;
  double mean_ree = 0.0;
  double se = 0.0;
};

struct GridResult {
  std::vector<RunRecord> records;  // ordered by (cell, replication, method)
  std::vector<SummaryRow> summary;

  const SummaryRow* find(double level, Method m) const;
};

/// Runs every cell and replication in a worker pool; results do not depend on the thread count.
GridResult run_grid(const RunConfig& cfg);

/// Data set for one (cell, replication); exposed so tests can reproduce a record.
Scenario grid_scenario(const RunConfig& cfg, std::size_t cell, std::size_t replication);
/// Runs one method on the scenario of grid cell `cell`; throws on failure.
RunRecord run_method(const RunConfig& cfg, std::size_t cell, const Scenario& sc, Method m, std::uint64_t seed);

inline constexpr const char* kGridSchema = "# shuffleprior grid records v1";
inline constexpr const char* kSummarySchema = "# shuffleprior grid summary v1";

void write_records_csv(std::ostream& os, const GridResult& r, bool timing);
/// mean, SE and mean -/+ 3 SE per (level, method).
void write_summary_csv(std::ostream& os, const GridResult& r);
void write_summary_table(std::ostream& os, const GridResult& r);

// ---- theory checks -------------------------------------------------------

struct OverfittingReport {
  std::size_t n = 0;
  double beta_star = 0.0;
  double sigma_star = 0.0;
  double beta_ml = 0.0;
  double sigma2_ml = 0.0;
  /// (1/n) sum_i (x_{pihat(i)} beta_ml - x_{pi*(i)} beta*)^2
  double fit_gap = 0.0;
  double beta_limit = 0.0;    // sqrt(beta*^2 + sigma*^2)
  double sigma2_limit = 0.0;  // 0
  double gap_limit = 0.0;     // sigma*^2
};

/// Simple regression with 10% of the pairs shuffled; pihat matches order statistics.
OverfittingReport demo_overfitting(std::size_t n, double beta_star, double sigma_star, std::uint64_t seed);

struct SparseRecoveryReplication {
  std::size_t hamming_to_identity = 0;
  double l2_error = 0.0;  // ||(Pihat - Pi*) mu||
  bool sparsity_holds = false;
  bool l2_holds = false;
};

struct SparseRecoveryReport {
  std::size_t n = 0, d = 0, k = 0;
  double snr = 0.0;
  double gamma = 0.0;
  double l2_bound = 0.0;
  std::vector<SparseRecoveryReplication> reps;
  double sparsity_rate() const;
  double l2_rate() const;
};

SparseRecoveryReport check_sparse_recovery(std::size_t n, std::size_t d, std::size_t k, double snr, std::size_t replications,
                              std::uint64_t seed);

enum class SignalShape { sine, constant };

struct BandedRecoveryReplication {
  std::size_t max_displacement = 0;
  double max_signal_gap = 0.0;  // max_i |mu_{pihat(i)} - mu_{pi*(i)}|
  bool banded = false;
  bool signal_bound_holds = false;
};

struct BandedRecoveryReport {
  std::size_t n = 0, r = 0;
  double lipschitz = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
  double threshold = 0.0;
  double probability_bound = 0.0;  // 1 - exp(-(sqrt2 - 1)^2 / 2) - 2/n, informational
  std::vector<BandedRecoveryReplication> reps;
  double banded_rate() const;
};

/// mu_i = sin(10 pi i / n) (L = 10 pi) or a constant; gamma is 1.01 times the threshold.
BandedRecoveryReport check_banded_recovery(std::size_t n, std::size_t r, double sigma, std::size_t replications, std::uint64_t seed,
                        SignalShape shape = SignalShape::sine);

// ---- data augmentation comparison ---------------------------------------

struct DaComparisonConfig {
  std::size_t n = 500;
  double mismatch = 0.4;
  double intercept = 1.0;
  double slope = 2.0;
  double sigma = 1.0;
  std::size_t outer = 1000;
  std::size_t augmentation_draws = 100;
  std::size_t thinning = 40;
  std::size_t replications = 20;
  std::uint64_t seed = 1;
};

struct DaComparisonRow {
  std::size_t replication = 0;
  double oracle_slope = 0.0;
  double oracle_sigma2 = 0.0;  // residual variance of the oracle fit
  double hamming_slope = 0.0;
  double hamming_sigma2 = 0.0;
  double uniform_slope = 0.0;
  double uniform_sigma2 = 0.0;
};

std::vector<DaComparisonRow> compare_data_augmentation(const DaComparisonConfig& cfg);
void write_da_comparison_csv(std::ostream& os, const std::vector<DaComparisonRow>& rows);

/// Worker count: SHUFFLEPRIOR_THREADS if set, otherwise hardware concurrency (at least 1).
std::size_t worker_count(std::size_t requested = 0);

}  // namespace shuffleprior
