#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <optional>
#include <vector>

#include "mcx/error.hpp"
#include "mcx/rng.hpp"

namespace mcx {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Evaluation tallies. `target` and `grad` are true-density costs;
/// `surrogate` counts cheap surrogate predictions and never overlaps them.
struct EvalCounters {
  std::uint64_t target = 0;
  std::uint64_t grad = 0;
  std::uint64_t surrogate = 0;

  EvalCounters& operator+=(const EvalCounters& other) {
    target += other.target;
    grad += other.grad;
    surrogate += other.surrogate;
    return *this;
  }
};

struct ChainState {
  Vector position;
  double cached_logpi = 0.0;
  std::optional<Vector> cached_grad;
  std::uint64_t step_index = 0;
};

/// Outcome of one kernel application. `accept_prob` is the Metropolis
/// acceptance probability (or the NUTS tree average) used by adaptation.
struct Transition {
  ChainState state;
  bool accepted = false;
  double accept_prob = 0.0;
  bool divergent = false;
  int tree_depth = 0;
  std::uint64_t n_leapfrog = 0;
};

/// Completed run of one chain (post-warmup draws only).
struct ChainRecord {
  Matrix samples;                      // N x d
  std::vector<std::uint8_t> accept_flags;
  std::vector<std::uint8_t> divergent;
  std::vector<double> accept_prob;
  std::vector<int> tree_depth;
  std::vector<std::uint64_t> n_leapfrog;
  std::vector<double> warmup_accept_prob;  // acceptance statistic of each warmup step
  std::uint64_t kernel_hash = 0;           // Kernel::parameter_hash() after warmup
  EvalCounters counters;               // whole run, warmup included
  EvalCounters sampling_counters;      // post-warmup only
  double wall_time = 0.0;
  std::map<std::string, double> kernel_parameters;  // frozen after warmup
  std::map<std::string, double> kernel_stats;       // sampler-specific tallies

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(samples.cols()); }
  double acceptance_rate() const;
  std::uint64_t divergences() const;
};

/// log of the Metropolis-Hastings acceptance probability,
/// min(0, (logpi_prop - logpi_cur) + (logg_bwd - logg_fwd)).
/// `logg_fwd` is log g(x'|x), `logg_bwd` is log g(x|x'). Symmetric proposals
/// pass zeros. Returns -inf for a zero-density proposal; throws
/// InvalidStateError if the current state has zero or NaN density.
double mh_accept_log_prob(double logpi_cur, double logpi_prop, double logg_fwd,
                          double logg_bwd);

/// Draws u ~ U(0,1) once and returns `proposal` if log(u) < log_alpha,
/// otherwise `state`. Either way the returned state has step_index + 1.
ChainState accept_or_reject(const ChainState& state, const ChainState& proposal,
                            double log_alpha, RngStream& rng, bool* accepted = nullptr);

struct StationarityReport {
  double max_deviation = 0.0;               // ||pi P - pi||_inf
  double max_detailed_balance_violation = 0.0;
  Matrix transition;                        // exact MH kernel
};

/// Builds the exact MH transition matrix for target `pi` and proposal matrix
/// `proposal` (row-stochastic, g_ij = g(j | i)) on a finite space and reports
/// how far pi is from stationarity and detailed balance.
StationarityReport discrete_stationarity_oracle(const Vector& pi, const Matrix& proposal);

}  // namespace mcx
