#pragma once

#include <optional>

#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Energy error above which a trajectory is declared divergent.
inline constexpr double kDivergenceThreshold = 1000.0;

struct PhasePoint {
  Vector q;  // position
  Vector p;  // momentum
};

struct HmcConfig {
  double epsilon = 0.1;
  int n_leapfrog = 10;
  Vector mass_diag;  // diagonal of M; empty means identity
};

struct NutsConfig {
  double epsilon = 0.1;
  Vector mass_diag;
  int max_tree_depth = 10;  // at most 20
};

/// K(p) = 1/2 sum p_i^2 / m_i.
double kinetic_energy(const Vector& p, const Vector& mass_diag);

/// H(q, p) = -log pi(q) + K(p); +inf outside the support.
double hamiltonian(const PhasePoint& point, const Vector& mass_diag, const TargetDensity& target);

struct LeapfrogResult {
  PhasePoint point;
  Vector grad_log_density;   // gradient of log pi at the final position
  bool divergent = false;
  int divergent_step = -1;   // 1-based position update at which the trajectory blew up
};

/// Velocity-Verlet (leapfrog) integration of Hamilton's equations for U = -log pi:
/// half momentum kick, `n_steps` alternating drifts q += eps M^{-1} p and full
/// kicks, then a closing half kick. `grad_at_start` (gradient of log pi at
/// point.q) is reused when supplied; otherwise it is evaluated and counted.
/// Non-finite values stop the integration and set the divergence fields.
LeapfrogResult leapfrog(const PhasePoint& point, double epsilon, int n_steps,
                        const Vector& mass_diag, const TargetDensity& target,
                        EvalCounters& counters, const Vector* grad_at_start = nullptr);

Transition hmc_step(const ChainState& state, const HmcConfig& config,
                    const TargetDensity& target, RngStream& rng, EvalCounters& counters);

/// Mean of the Langevin proposal, x + (eps^2 / 2) grad log pi(x).
Vector mala_proposal_mean(const Vector& x, const Vector& grad, double epsilon);

Transition mala_step(const ChainState& state, double epsilon, const TargetDensity& target,
                     RngStream& rng, EvalCounters& counters);

/// False once the trajectory endpoints start approaching each other:
/// (q+ - q-) . v- < 0 or (q+ - q-) . v+ < 0, with v = M^{-1} p.
bool no_u_turn(const Vector& q_minus, const Vector& q_plus, const Vector& v_minus,
               const Vector& v_plus);

/// No-U-Turn sampler, slice-variable tree-doubling variant.
Transition nuts_step(const ChainState& state, const NutsConfig& config,
                     const TargetDensity& target, RngStream& rng, EvalCounters& counters);

}  // namespace mcx
