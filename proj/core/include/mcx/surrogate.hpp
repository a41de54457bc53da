#pragma once

#include <vector>

#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Kernel ridge regression of log pi with a squared-exponential kernel
/// (the posterior mean of a zero-mean Gaussian process).
class SurrogateModel {
 public:
  SurrogateModel() = default;

  const Matrix& inputs() const { return inputs_; }
  const Vector& values() const { return values_; }
  const Vector& weights() const { return weights_; }
  double bandwidth() const { return bandwidth_; }
  double ridge() const { return ridge_; }
  std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs_.cols()); }

  /// Uncounted prediction.
  double predict(const Vector& x) const;
  /// Distance from x to the nearest training input.
  double min_distance(const Vector& x) const;
  /// Largest |prediction - value| over the training inputs.
  double max_training_residual() const;
  /// Residual tolerance 10 * ridge * ||values||_inf.
  double fit_tolerance() const;

  friend SurrogateModel fit_surrogate(const Matrix&, const Vector&, double, double);

 private:
  Matrix inputs_;
  Vector values_;
  Vector weights_;
  double bandwidth_ = 1.0;
  double ridge_ = 1e-3;
};

/// Solves (K + ridge I) w = values for the M x M kernel matrix. Requires at
/// least two distinct rows; throws FitError if the system cannot be solved.
SurrogateModel fit_surrogate(const Matrix& points, const Vector& logpi_values, double bandwidth,
                             double ridge);

struct SurrogatePrediction {
  double value = 0.0;
  bool low_confidence = false;  // nearest training point > 3 bandwidths away
};

/// Counted prediction; increments counters.surrogate only.
SurrogatePrediction surrogate_predict(const SurrogateModel& model, const Vector& x,
                                      EvalCounters& counters);

/// Max |prediction - true log pi| over a grid; used as the surrogate quality report.
double surrogate_grid_error(const SurrogateModel& model, const TargetDensity& target,
                            const Vector& lower, const Vector& upper, std::size_t per_axis);

/// Adds up to `n_new` visited states with the largest |prediction - true|
/// residual, then refits. `visited_logpi` holds the already-paid true values.
SurrogateModel refine_surrogate(const SurrogateModel& model, const Matrix& visited,
                                const Vector& visited_logpi, std::size_t n_new);

/// Same, reading positions from a chain record and re-evaluating the target
/// for their true values (counted).
SurrogateModel refine_surrogate(const SurrogateModel& model, const ChainRecord& chain,
                                const TargetDensity& target, std::size_t n_new,
                                EvalCounters& counters);

struct DelayedAcceptanceStats {
  std::uint64_t proposed = 0;
  std::uint64_t stage1_accepted = 0;
  std::uint64_t stage2_accepted = 0;

  double stage1_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(stage1_accepted) / static_cast<double>(proposed);
  }
  double stage2_rate() const {
    return stage1_accepted == 0 ? 0.0
                                : static_cast<double>(stage2_accepted) / static_cast<double>(stage1_accepted);
  }
};

/// Two-stage Metropolis-Hastings with a symmetric Gaussian random-walk inner
/// kernel. Stage 1 screens with surrogate ratios; survivors pay one true
/// evaluation and are corrected by min(1, pi(x') pihat(x) / (pi(x) pihat(x'))),
/// which keeps pi exactly invariant. With `approximate` set, stage 2 is
/// skipped and the chain targets the surrogate instead (biased; the state's
/// cached_logpi then holds surrogate values).
Transition delayed_acceptance_step(const ChainState& state, double sigma,
                                   const SurrogateModel& surrogate, const TargetDensity& target,
                                   RngStream& rng, EvalCounters& counters,
                                   DelayedAcceptanceStats* stats = nullptr,
                                   bool approximate = false);

}  // namespace mcx
