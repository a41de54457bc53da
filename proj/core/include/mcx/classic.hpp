#pragma once

#include <functional>
#include <variant>
#include <vector>

#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Evaluates the target at `position` and packages a chain state. Throws
/// InvalidStateError when the density is zero there. The gradient is cached
/// when `with_gradient` is set.
ChainState make_state(const TargetDensity& target, const Vector& position,
                      EvalCounters& counters, bool with_gradient = false);

struct RwmConfig {
  double sigma = 1.0;  // isotropic proposal scale
};

/// Random-walk Metropolis: x' ~ N(x, sigma^2 I), one target evaluation.
Transition rwm_step(const ChainState& state, const RwmConfig& config,
                    const TargetDensity& target, RngStream& rng, EvalCounters& counters);

/// Draws x' given x.
using ProposalSampler = std::function<Vector(const Vector& from, RngStream& rng)>;
/// log g(to | from).
using ProposalLogDensity = std::function<double(const Vector& to, const Vector& from)>;

/// General Metropolis-Hastings with an arbitrary (possibly asymmetric) kernel.
Transition mh_step(const ChainState& state, const ProposalSampler& propose,
                   const ProposalLogDensity& proposal_log_density,
                   const TargetDensity& target, RngStream& rng, EvalCounters& counters);

/// Exact Normal full conditional of coordinate `index` for N(mean, cov).
class GaussianConditional {
 public:
  GaussianConditional(const Vector& mean, const Matrix& cov, std::size_t index);

  std::size_t index() const { return index_; }
  double mean(const Vector& x) const;
  double variance() const { return variance_; }
  double operator()(const Vector& x, RngStream& rng) const;

 private:
  std::size_t index_;
  double mu_i_;
  Vector mu_rest_;
  Vector coeffs_;  // Sigma_{i,-i} Sigma_{-i,-i}^{-1}
  double variance_;
};

/// Throws DecompositionError if `cov` is not symmetric positive definite.
GaussianConditional gaussian_fcd(const Vector& mean, const Matrix& cov, std::size_t index);

/// Draws coordinate i given the full current vector (coordinate i is ignored).
using ConditionalDraw = std::function<double(const Vector& x, RngStream& rng)>;

/// Metropolis-within-Gibbs slot: a 1-d random-walk update on the conditional.
struct MetropolisConditional {
  double sigma = 1.0;
};

using ConditionalSlot = std::variant<ConditionalDraw, MetropolisConditional>;

class FullConditionalSet {
 public:
  FullConditionalSet() = default;
  explicit FullConditionalSet(std::vector<ConditionalSlot> slots) : slots_(std::move(slots)) {}

  /// Exact Gaussian conditionals for every coordinate.
  static FullConditionalSet gaussian(const Vector& mean, const Matrix& cov);
  /// Metropolis-within-Gibbs with one scalar random-walk scale per coordinate.
  static FullConditionalSet metropolis(const Vector& sigmas);

  std::size_t size() const { return slots_.size(); }
  const ConditionalSlot& operator[](std::size_t i) const { return slots_[i]; }
  ConditionalSlot& operator[](std::size_t i) { return slots_[i]; }

 private:
  std::vector<ConditionalSlot> slots_;
};

/// Per-slot Metropolis acceptance tallies for Metropolis-within-Gibbs slots.
struct GibbsSlotStats {
  std::vector<std::uint64_t> proposed;
  std::vector<std::uint64_t> accepted;

  double rate(std::size_t i) const {
    return proposed[i] == 0 ? 1.0 : static_cast<double>(accepted[i]) / static_cast<double>(proposed[i]);
  }
};

/// One systematic scan over coordinates 0..d-1, each update seeing the
/// already-updated lower coordinates. One scan is one chain step; the
/// returned transition is always flagged accepted.
Transition gibbs_step(const ChainState& state, const FullConditionalSet& fcds,
                      const TargetDensity& target, RngStream& rng, EvalCounters& counters,
                      GibbsSlotStats* stats = nullptr);

}  // namespace mcx
