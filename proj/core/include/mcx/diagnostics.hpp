#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// R-hat levels used when annotating reports.
inline constexpr double kRhatGood = 1.01;
inline constexpr double kRhatWarning = 1.4;

/// Biased autocorrelation estimator rho_k = c_k / c_0 for k = 0..max_lag.
/// Requires N >= 2 max_lag; throws DegenerateChainError on zero variance.
Vector autocorrelation(const Vector& series, std::size_t max_lag);

/// Effective sample size N / (1 + 2 sum rho_k), truncated by Geyer's initial
/// positive sequence; clamped to N.
double ess(const Vector& series);

/// Split-chain Gelman-Rubin statistic per dimension over M >= 2 equal-length chains.
Vector gelman_rubin(const std::vector<Matrix>& chains);

/// Mean squared jump distance between consecutive rows.
double esjd(const Matrix& samples);

/// Batch-means estimate of the asymptotic variance of the sample mean times N.
double batch_means_variance(const Vector& series, std::size_t n_batches);

struct DiagnosticsReport {
  std::string target;
  std::string sampler;
  std::size_t n_chains = 0;
  std::size_t n_samples = 0;        // per chain
  std::size_t dim = 0;
  Vector ess;                       // pooled (sum over chains)
  std::optional<Vector> rhat;       // only with >= 2 chains
  double acceptance_rate = 0.0;
  double esjd = 0.0;
  Vector asym_variance;
  std::uint64_t n_divergences = 0;
  EvalCounters counters;            // all chains, warmup included
  EvalCounters sampling_counters;   // all chains, post-warmup only
  double min_ess = 0.0;
  double ess_per_step = 0.0;        // min ESS / (chains * samples)
  double ess_per_true_eval = 0.0;   // min ESS / target evaluations
  double ess_per_grad_eval = 0.0;   // min ESS / gradient evaluations (0 when none)
  double mean_tree_depth = 0.0;
  double mean_leapfrog = 0.0;
  Vector sample_mean;
  Vector sample_var;
  Vector mcse_mean;                 // sqrt(var / ess)
  std::optional<Vector> mean_error; // sample mean - analytic mean
  std::optional<Vector> var_error;  // sample var - analytic var
  std::vector<std::string> notes;
  std::map<std::string, double> extras;  // sampler-specific statistics
};

/// Aggregates per-chain diagnostics. Throws InputError on mismatched dimensions.
DiagnosticsReport build_report(const std::vector<ChainRecord>& chains, const TargetDensity& target,
                               const std::string& sampler = "");

/// Stable JSON serialization (fixed field order, shortest round-trip doubles).
std::string report_to_json(const DiagnosticsReport& report);

/// One row per dimension: dim,ess,rhat,asym_variance,mean,var,mcse_mean.
std::string report_to_csv(const DiagnosticsReport& report);

}  // namespace mcx
