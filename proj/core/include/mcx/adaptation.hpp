#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Nesterov dual-averaging state for adapting a log step size toward a
/// target acceptance statistic.
struct DualAveragingState {
  double log_eps = 0.0;
  double log_eps_avg = 0.0;
  double h_bar = 0.0;
  double mu = 0.0;
  std::uint64_t iteration = 0;  // number of updates applied so far
  double target_accept = 0.8;
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;

  /// Fresh state for initial step `eps0`: mu = log(10 eps0).
  static DualAveragingState start(double eps0, double target_accept);

  double step_size() const;
  /// Step size frozen after warmup, exp(log_eps_avg).
  double final_step_size() const;
};

DualAveragingState dual_averaging_update(DualAveragingState da, double observed_accept);

struct StepSizeSearch {
  double epsilon = 1.0;
  int direction = 0;       // +1 doubled, -1 halved
  int iterations = 0;
  Vector momentum;         // the momentum draw used for every trial step
};

/// Doubles or halves epsilon until the one-step Metropolis ratio exp(-dH)
/// crosses 1/2. Throws InitializationError after 100 adjustments.
StepSizeSearch find_reasonable_epsilon(const ChainState& state, const Vector& mass_diag,
                                       const TargetDensity& target, RngStream& rng,
                                       EvalCounters& counters, double initial_epsilon = 1.0);

/// Energy ratio exp(-dH) of a single leapfrog step from (q, p); uncounted.
double one_step_accept_ratio(const Vector& q, const Vector& p, double epsilon,
                             const Vector& mass_diag, const TargetDensity& target);

/// Diagonal mass from warmup draws: 1 / sample variance per coordinate, with
/// variances clamped below at 1e-8. Requires at least 10 rows.
Vector estimate_mass_diag(const Matrix& warmup_samples);

/// Three-phase warmup layout: step size only, mass windows of doubling length,
/// then step size again with the mass frozen.
struct WarmupPlan {
  std::size_t n_warmup = 0;
  std::size_t initial_end = 0;                 // [0, initial_end) step size only
  std::vector<std::size_t> window_ends;        // mass re-estimated at each end
  std::size_t final_begin = 0;                 // [final_begin, n_warmup) frozen mass
};

WarmupPlan plan_warmup(std::size_t n_warmup);

// ---- ESS-driven hyperparameter search ------------------------------------

enum class TuningObjective { min_ess, ess_per_grad_eval };

struct TuningParameter {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool log_scale = false;
};

struct TuningJob {
  std::string sampler;                        // kernel registry name
  std::vector<TuningParameter> box;
  std::map<std::string, double> fixed;        // hyperparameters held constant
  std::size_t budget = 16;                    // pilot runs
  std::size_t pilot_length = 5000;
  TuningObjective objective = TuningObjective::min_ess;
  double max_total_steps = 5e7;               // budget * pilot_length guard
};

struct TuningRecord {
  std::size_t eval_index = 0;
  std::vector<double> theta;
  double objective = 0.0;
  double accept_rate = 0.0;
  std::uint64_t divergences = 0;
  double min_ess = 0.0;
};

struct TuningResult {
  std::map<std::string, double> best;
  TuningRecord best_record;
  std::vector<TuningRecord> trace;
};

class TuningFailedError : public Error {
 public:
  TuningFailedError(const std::string& what, std::vector<TuningRecord> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<TuningRecord>& trace() const { return trace_; }

 private:
  std::vector<TuningRecord> trace_;
};

/// Surrogate-guided search maximizing an ESS objective over a hyperparameter
/// box. The first max(2, budget/4) points are quasi-random; the rest maximize
/// an upper confidence bound of a squared-exponential kernel regressor fitted
/// to the evaluated objectives. Every point is a fresh pilot chain on its own
/// substream; the result is the best point actually evaluated.
TuningResult tune_by_ess(const TuningJob& job, const TargetDensity& target, RngStream& rng);

/// eval_index, theta columns, objective, accept_rate, divergences.
void write_tuning_trace_csv(std::ostream& out, const TuningJob& job, const TuningResult& result);

}  // namespace mcx
