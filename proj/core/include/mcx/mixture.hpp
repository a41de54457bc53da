#pragma once

#include <cstdint>

#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Diagonal-covariance Gaussian mixture used as a global independence proposal.
struct MixtureProposal {
  Vector weights;        // K, sums to 1
  Matrix means;          // K x d
  Matrix variances;      // K x d, all > 0
  std::uint64_t generation = 0;
  std::vector<double> log_likelihood_trace;  // per EM iteration

  std::size_t components() const { return static_cast<std::size_t>(weights.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }

  double log_density(const Vector& x) const;
  Vector sample(RngStream& rng) const;
};

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;         // stop when the mean log-likelihood gains less
  double variance_floor = 1e-6;
  int restarts = 4;                // independent seedings; the best final likelihood wins
};

/// Expectation-maximization with k-means++ style seeding, restarted
/// `options.restarts` times. Requires N >= 10 K.
MixtureProposal fit_gmm(const Matrix& samples, std::size_t components, RngStream& rng,
                        const GmmOptions& options = {});

/// Independence Metropolis-Hastings: x' ~ g, accepted with
/// min(1, pi(x') g(x) / (pi(x) g(x'))). A current state where g vanishes
/// numerically is rejected with certainty.
Transition independence_proposal_step(const ChainState& state, const MixtureProposal& proposal,
                                      const TargetDensity& target, RngStream& rng,
                                      EvalCounters& counters);

}  // namespace mcx
