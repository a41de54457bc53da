#include "mcx/gradient.hpp"

#include <cmath>
#include <limits>

#include "mcx/classic.hpp"

namespace mcx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector resolve_mass(const Vector& mass_diag, std::size_t dim) {
  if (mass_diag.size() == 0) return Vector::Ones(static_cast<Eigen::Index>(dim));
  if (static_cast<std::size_t>(mass_diag.size()) != dim) {
    throw InputError("mass_diag has the wrong dimension");
  }
  if (!(mass_diag.array() > 0.0).all()) throw InputError("mass_diag entries must be positive");
  return mass_diag;
}

Vector draw_momentum(const Vector& mass, RngStream& rng) {
  Vector p(mass.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::sqrt(mass(i)) * rng.normal();
  return p;
}

const Vector& ensure_gradient(const ChainState& state, const TargetDensity& target,
                              EvalCounters& counters, Vector& storage) {
  if (state.cached_grad) return *state.cached_grad;
  storage = target.gradient(state.position, counters);
  return storage;
}

}  // namespace

double kinetic_energy(const Vector& p, const Vector& mass_diag) {
  if (mass_diag.size() == 0) return 0.5 * p.squaredNorm();
  return 0.5 * (p.array().square() / mass_diag.array()).sum();
}

double hamiltonian(const PhasePoint& point, const Vector& mass_diag, const TargetDensity& target) {
  const double logpi = target.log_density(point.q);
  if (std::isnan(logpi) || logpi == -kInf) return kInf;
  return -logpi + kinetic_energy(point.p, mass_diag);
}

LeapfrogResult leapfrog(const PhasePoint& point, double epsilon, int n_steps,
                        const Vector& mass_diag, const TargetDensity& target,
                        EvalCounters& counters, const Vector* grad_at_start) {
  if (n_steps < 0) throw InputError("leapfrog: n_steps must be non-negative");
  const Vector mass = resolve_mass(mass_diag, target.dim());
  const Vector inv_mass = mass.cwiseInverse();

  LeapfrogResult out;
  Vector q = point.q;
  Vector p = point.p;
  Vector grad = grad_at_start != nullptr ? *grad_at_start : target.gradient(q, counters);

  // U = -log pi, so grad U = -grad log pi and the kick is p += eps * grad log pi.
  p += 0.5 * epsilon * grad;
  for (int i = 1; i <= n_steps; ++i) {
    q += epsilon * inv_mass.cwiseProduct(p);
    grad = target.gradient(q, counters);
    if (!q.allFinite() || !grad.allFinite()) {
      out.divergent = true;
      out.divergent_step = i;
      break;
    }
    if (i != n_steps) p += epsilon * grad;
  }
  if (!out.divergent) p += 0.5 * epsilon * grad;
  if (!out.divergent && !p.allFinite()) {
    out.divergent = true;
    out.divergent_step = n_steps;
  }
  out.point = PhasePoint{std::move(q), std::move(p)};
  out.grad_log_density = std::move(grad);
  return out;
}

Transition hmc_step(const ChainState& state, const HmcConfig& config,
                    const TargetDensity& target, RngStream& rng, EvalCounters& counters) {
  if (!(config.epsilon > 0.0) || config.n_leapfrog < 1) {
    throw InputError("hmc_step: epsilon must be > 0 and n_leapfrog >= 1");
  }
  const Vector mass = resolve_mass(config.mass_diag, target.dim());
  Vector grad_storage;
  const Vector& grad0 = ensure_gradient(state, target, counters, grad_storage);

  const PhasePoint start{state.position, draw_momentum(mass, rng)};
  const double h0 = -state.cached_logpi + kinetic_energy(start.p, mass);

  LeapfrogResult traj =
      leapfrog(start, config.epsilon, config.n_leapfrog, mass, target, counters, &grad0);

  ChainState proposal;
  proposal.position = traj.point.q;
  double logpi_prop = -kInf;
  if (!traj.divergent) logpi_prop = target.log_density(proposal.position, counters);
  // Momentum flip makes the proposal an involution; K is even so H is unchanged.
  const Vector p_flipped = -traj.point.p;
  const double h1 = (std::isnan(logpi_prop) || logpi_prop == -kInf)
                        ? kInf
                        : -logpi_prop + kinetic_energy(p_flipped, mass);

  Transition t;
  t.n_leapfrog = static_cast<std::uint64_t>(config.n_leapfrog);
  t.divergent = traj.divergent || !std::isfinite(h1) || (h1 - h0) > kDivergenceThreshold;
  if (t.divergent) logpi_prop = -kInf;
  proposal.cached_logpi = logpi_prop;
  proposal.cached_grad = std::move(traj.grad_log_density);

  // Energy acceptance min(0, H0 - H1) expressed through the shared MH kernel.
  const double log_alpha = mh_accept_log_prob(-h0, t.divergent ? -kInf : -h1, 0.0, 0.0);
  t.accept_prob = std::exp(log_alpha);
  ChainState current = state;
  if (!current.cached_grad) current.cached_grad = grad0;
  t.state = accept_or_reject(current, proposal, log_alpha, rng, &t.accepted);
  return t;
}

Vector mala_proposal_mean(const Vector& x, const Vector& grad, double epsilon) {
  return x + 0.5 * epsilon * epsilon * grad;
}

Transition mala_step(const ChainState& state, double epsilon, const TargetDensity& target,
                     RngStream& rng, EvalCounters& counters) {
  if (!(epsilon > 0.0)) throw InputError("mala_step: epsilon must be > 0");
  Vector grad_storage;
  const Vector& grad0 = ensure_gradient(state, target, counters, grad_storage);

  const Vector mean_fwd = mala_proposal_mean(state.position, grad0, epsilon);
  ChainState proposal;
  proposal.position = mean_fwd;
  for (Eigen::Index i = 0; i < proposal.position.size(); ++i) {
    proposal.position(i) += epsilon * rng.normal();
  }
  proposal.cached_logpi = target.log_density(proposal.position, counters);

  double logg_fwd = 0.0;
  double logg_bwd = -kInf;
  if (std::isfinite(proposal.cached_logpi)) {
    proposal.cached_grad = target.gradient(proposal.position, counters);
    const double inv_two_var = 1.0 / (2.0 * epsilon * epsilon);
    const Vector mean_bwd = mala_proposal_mean(proposal.position, *proposal.cached_grad, epsilon);
    logg_fwd = -(proposal.position - mean_fwd).squaredNorm() * inv_two_var;
    logg_bwd = -(state.position - mean_bwd).squaredNorm() * inv_two_var;
  }
  const double log_alpha =
      mh_accept_log_prob(state.cached_logpi, proposal.cached_logpi, logg_fwd, logg_bwd);

  Transition t;
  t.accept_prob = std::exp(log_alpha);
  ChainState current = state;
  if (!current.cached_grad) current.cached_grad = grad0;
  t.state = accept_or_reject(current, proposal, log_alpha, rng, &t.accepted);
  return t;
}

bool no_u_turn(const Vector& q_minus, const Vector& q_plus, const Vector& v_minus,
               const Vector& v_plus) {
  const Vector span = q_plus - q_minus;
  return span.dot(v_minus) >= 0.0 && span.dot(v_plus) >= 0.0;
}

namespace {

struct TreeNode {
  Vector q;
  Vector p;
  Vector grad;
};

struct Subtree {
  TreeNode minus;
  TreeNode plus;
  Vector candidate;
  double candidate_logpi = 0.0;
  Vector candidate_grad;
  std::uint64_t n_valid = 0;   // states inside the slice
  bool keep_going = true;
  bool divergent = false;
  double alpha_sum = 0.0;
  std::uint64_t n_alpha = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TargetDensity& target, const Vector& mass, double epsilon, double log_slice,
              double joint0, RngStream& rng, EvalCounters& counters)
      : target_(target),
        mass_(mass),
        inv_mass_(mass.cwiseInverse()),
        epsilon_(epsilon),
        log_slice_(log_slice),
        joint0_(joint0),
        rng_(rng),
        counters_(counters) {}

  Subtree build(const TreeNode& from, int direction, int depth) {
    if (depth == 0) return leaf(from, direction);

    Subtree first = build(from, direction, depth - 1);
    if (!first.keep_going) return first;

    const TreeNode& edge = direction < 0 ? first.minus : first.plus;
    Subtree second = build(edge, direction, depth - 1);
    if (direction < 0) {
      first.minus = std::move(second.minus);
    } else {
      first.plus = std::move(second.plus);
    }
    const std::uint64_t total = first.n_valid + second.n_valid;
    if (total > 0 && rng_.uniform() * static_cast<double>(total) < static_cast<double>(second.n_valid)) {
      first.candidate = std::move(second.candidate);
      first.candidate_logpi = second.candidate_logpi;
      first.candidate_grad = std::move(second.candidate_grad);
    }
    first.alpha_sum += second.alpha_sum;
    first.n_alpha += second.n_alpha;
    first.divergent = first.divergent || second.divergent;
    first.n_valid = total;
    first.keep_going = second.keep_going &&
                       no_u_turn(first.minus.q, first.plus.q, inv_mass_.cwiseProduct(first.minus.p),
                                 inv_mass_.cwiseProduct(first.plus.p));
    return first;
  }

  std::uint64_t leapfrog_steps() const { return n_leapfrog_; }

 private:
  Subtree leaf(const TreeNode& from, int direction) {
    ++n_leapfrog_;
    const double eps = direction * epsilon_;
    TreeNode node;
    node.p = from.p + 0.5 * eps * from.grad;
    node.q = from.q + eps * inv_mass_.cwiseProduct(node.p);
    node.grad = target_.gradient(node.q, counters_);
    node.p += 0.5 * eps * node.grad;

    double logpi = -kInf;
    if (node.q.allFinite() && node.grad.allFinite() && node.p.allFinite()) {
      logpi = target_.log_density(node.q, counters_);
    }
    const double joint =
        (std::isnan(logpi) || logpi == -kInf) ? -kInf : logpi - kinetic_energy(node.p, mass_);

    Subtree out;
    out.n_valid = log_slice_ <= joint ? 1 : 0;
    out.keep_going = log_slice_ < kDivergenceThreshold + joint;
    out.divergent = !out.keep_going;
    out.alpha_sum = std::isfinite(joint) ? std::min(1.0, std::exp(joint - joint0_)) : 0.0;
    out.n_alpha = 1;
    out.candidate = node.q;
    out.candidate_logpi = logpi;
    out.candidate_grad = node.grad;
    out.minus = node;
    out.plus = std::move(node);
    return out;
  }

  const TargetDensity& target_;
  const Vector& mass_;
  Vector inv_mass_;
  double epsilon_;
  double log_slice_;
  double joint0_;
  RngStream& rng_;
  EvalCounters& counters_;
  std::uint64_t n_leapfrog_ = 0;
};

}  // namespace

Transition nuts_step(const ChainState& state, const NutsConfig& config,
                     const TargetDensity& target, RngStream& rng, EvalCounters& counters) {
  if (!(config.epsilon > 0.0)) throw InputError("nuts_step: epsilon must be > 0");
  if (config.max_tree_depth < 1 || config.max_tree_depth > 20) {
    throw InputError("nuts_step: max_tree_depth must lie in [1, 20]");
  }
  const Vector mass = resolve_mass(config.mass_diag, target.dim());
  Vector grad_storage;
  const Vector& grad0 = ensure_gradient(state, target, counters, grad_storage);

  const Vector p0 = draw_momentum(mass, rng);
  const double joint0 = state.cached_logpi - kinetic_energy(p0, mass);
  const double log_slice = joint0 + std::log(rng.uniform());

  TreeBuilder builder(target, mass, config.epsilon, log_slice, joint0, rng, counters);
  TreeNode minus{state.position, p0, grad0};
  TreeNode plus = minus;

  ChainState next = state;
  if (!next.cached_grad) next.cached_grad = grad0;
  std::uint64_t n_valid = 1;
  bool keep_going = true;
  bool divergent = false;
  double alpha_sum = 0.0;
  std::uint64_t n_alpha = 0;
  int depth = 0;
  bool moved = false;

  while (keep_going && depth < config.max_tree_depth) {
    const int direction = rng.uniform() < 0.5 ? -1 : 1;
    Subtree sub = direction < 0 ? builder.build(minus, -1, depth) : builder.build(plus, 1, depth);
    if (direction < 0) {
      minus = sub.minus;
    } else {
      plus = sub.plus;
    }
    alpha_sum += sub.alpha_sum;
    n_alpha += sub.n_alpha;
    divergent = divergent || sub.divergent;

    if (sub.keep_going && sub.n_valid > 0) {
      const double ratio = static_cast<double>(sub.n_valid) / static_cast<double>(n_valid);
      if (rng.uniform() < ratio) {
        next.position = std::move(sub.candidate);
        next.cached_logpi = sub.candidate_logpi;
        next.cached_grad = std::move(sub.candidate_grad);
        moved = true;
      }
    }
    n_valid += sub.n_valid;
    keep_going = sub.keep_going && no_u_turn(minus.q, plus.q, mass.cwiseInverse().cwiseProduct(minus.p),
                                             mass.cwiseInverse().cwiseProduct(plus.p));
    ++depth;
  }

  Transition t;
  t.state = std::move(next);
  t.state.step_index = state.step_index + 1;
  t.accepted = moved;
  t.accept_prob = n_alpha > 0 ? alpha_sum / static_cast<double>(n_alpha) : 0.0;
  t.divergent = divergent;
  t.tree_depth = depth;
  t.n_leapfrog = builder.leapfrog_steps();
  return t;
}

}  // namespace mcx
