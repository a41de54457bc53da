#include "mcx/classic.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace mcx {

ChainState make_state(const TargetDensity& target, const Vector& position,
                      EvalCounters& counters, bool with_gradient) {
  if (static_cast<std::size_t>(position.size()) != target.dim()) {
    throw InputError("initial position has dimension " + std::to_string(position.size()) +
                     ", target expects " + std::to_string(target.dim()));
  }
  ChainState state;
  state.position = position;
  state.cached_logpi = target.log_density(position, counters);
  if (!std::isfinite(state.cached_logpi)) {
    throw InvalidStateError("initial position has zero density under '" + target.name() + "'");
  }
  if (with_gradient) state.cached_grad = target.gradient(position, counters);
  return state;
}

Transition rwm_step(const ChainState& state, const RwmConfig& config,
                    const TargetDensity& target, RngStream& rng, EvalCounters& counters) {
  ChainState proposal;
  proposal.position = state.position;
  for (Eigen::Index i = 0; i < proposal.position.size(); ++i) {
    proposal.position(i) += config.sigma * rng.normal();
  }
  proposal.cached_logpi = target.log_density(proposal.position, counters);
  const double log_alpha = mh_accept_log_prob(state.cached_logpi, proposal.cached_logpi, 0.0, 0.0);

  Transition t;
  t.accept_prob = std::exp(log_alpha);
  t.state = accept_or_reject(state, proposal, log_alpha, rng, &t.accepted);
  if (t.accepted) t.state.cached_grad.reset();
  return t;
}

Transition mh_step(const ChainState& state, const ProposalSampler& propose,
                   const ProposalLogDensity& proposal_log_density,
                   const TargetDensity& target, RngStream& rng, EvalCounters& counters) {
  ChainState proposal;
  proposal.position = propose(state.position, rng);
  if (proposal.position.size() != state.position.size() || !proposal.position.allFinite()) {
    throw ProposalError("proposal kernel returned a non-finite or misshapen point");
  }
  proposal.cached_logpi = target.log_density(proposal.position, counters);
  const double logg_fwd = proposal_log_density(proposal.position, state.position);
  const double logg_bwd = proposal_log_density(state.position, proposal.position);
  const double log_alpha =
      mh_accept_log_prob(state.cached_logpi, proposal.cached_logpi, logg_fwd, logg_bwd);

  Transition t;
  t.accept_prob = std::exp(log_alpha);
  t.state = accept_or_reject(state, proposal, log_alpha, rng, &t.accepted);
  if (t.accepted) t.state.cached_grad.reset();
  return t;
}

GaussianConditional::GaussianConditional(const Vector& mean, const Matrix& cov, std::size_t index)
    : index_(index) {
  const Eigen::Index d = mean.size();
  const auto i = static_cast<Eigen::Index>(index);
  if (cov.rows() != d || cov.cols() != d || i >= d) {
    throw InputError("gaussian_fcd: mean/cov/index sizes disagree");
  }
  if (!cov.isApprox(cov.transpose(), 1e-12)) {
    throw DecompositionError("gaussian_fcd: covariance is not symmetric");
  }
  Eigen::LLT<Matrix> full(cov);
  if (full.info() != Eigen::Success) {
    throw DecompositionError("gaussian_fcd: covariance is not positive definite");
  }

  std::vector<Eigen::Index> rest;
  for (Eigen::Index j = 0; j < d; ++j)
    if (j != i) rest.push_back(j);
  const auto r = static_cast<Eigen::Index>(rest.size());

  mu_i_ = mean(i);
  mu_rest_.resize(r);
  Matrix s_rr(r, r);
  Vector s_ir(r);
  for (Eigen::Index a = 0; a < r; ++a) {
    mu_rest_(a) = mean(rest[static_cast<std::size_t>(a)]);
    s_ir(a) = cov(i, rest[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < r; ++b)
      s_rr(a, b) = cov(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
  }
  if (r == 0) {
    coeffs_.resize(0);
    variance_ = cov(i, i);
  } else {
    Eigen::LLT<Matrix> llt(s_rr);
    if (llt.info() != Eigen::Success) {
      throw DecompositionError("gaussian_fcd: complement covariance is not positive definite");
    }
    coeffs_ = llt.solve(s_ir);
    variance_ = cov(i, i) - s_ir.dot(coeffs_);
  }
  if (!(variance_ > 0.0)) {
    throw DecompositionError("gaussian_fcd: conditional variance is not positive");
  }
}

double GaussianConditional::mean(const Vector& x) const {
  double m = mu_i_;
  Eigen::Index a = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (j == static_cast<Eigen::Index>(index_)) continue;
    m += coeffs_(a) * (x(j) - mu_rest_(a));
    ++a;
  }
  return m;
}

double GaussianConditional::operator()(const Vector& x, RngStream& rng) const {
  return mean(x) + std::sqrt(variance_) * rng.normal();
}

GaussianConditional gaussian_fcd(const Vector& mean, const Matrix& cov, std::size_t index) {
  return GaussianConditional(mean, cov, index);
}

FullConditionalSet FullConditionalSet::gaussian(const Vector& mean, const Matrix& cov) {
  std::vector<ConditionalSlot> slots;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    GaussianConditional fcd(mean, cov, static_cast<std::size_t>(i));
    slots.emplace_back(ConditionalDraw(
        [fcd](const Vector& x, RngStream& rng) { return fcd(x, rng); }));
  }
  return FullConditionalSet(std::move(slots));
}

FullConditionalSet FullConditionalSet::metropolis(const Vector& sigmas) {
  std::vector<ConditionalSlot> slots;
  for (Eigen::Index i = 0; i < sigmas.size(); ++i) {
    slots.emplace_back(MetropolisConditional{sigmas(i)});
  }
  return FullConditionalSet(std::move(slots));
}

Transition gibbs_step(const ChainState& state, const FullConditionalSet& fcds,
                      const TargetDensity& target, RngStream& rng, EvalCounters& counters,
                      GibbsSlotStats* stats) {
  if (fcds.size() != target.dim()) {
    throw InputError("gibbs_step: conditional set size does not match target dimension");
  }
  if (stats != nullptr && stats->proposed.size() != fcds.size()) {
    stats->proposed.assign(fcds.size(), 0);
    stats->accepted.assign(fcds.size(), 0);
  }

  Vector x = state.position;
  double logpi = state.cached_logpi;
  bool logpi_current = true;

  for (std::size_t i = 0; i < fcds.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (const auto* draw = std::get_if<ConditionalDraw>(&fcds[i])) {
      const double value = (*draw)(x, rng);
      if (!std::isfinite(value)) {
        throw ConditionalError("full conditional " + std::to_string(i) + " returned a non-finite draw", i);
      }
      x(ii) = value;
      logpi_current = false;
    } else {
      const auto& mwg = std::get<MetropolisConditional>(fcds[i]);
      if (!logpi_current) {
        logpi = target.log_density(x, counters);
        logpi_current = true;
      }
      Vector prop = x;
      prop(ii) += mwg.sigma * rng.normal();
      const double logpi_prop = target.log_density(prop, counters);
      const double log_alpha = mh_accept_log_prob(logpi, logpi_prop, 0.0, 0.0);
      const bool take = std::log(rng.uniform()) < log_alpha;
      if (stats != nullptr) {
        ++stats->proposed[i];
        if (take) ++stats->accepted[i];
      }
      if (take) {
        x = std::move(prop);
        logpi = logpi_prop;
      }
    }
  }

  Transition t;
  t.state.position = std::move(x);
  t.state.cached_logpi = logpi_current ? logpi : target.log_density(t.state.position, counters);
  t.state.step_index = state.step_index + 1;
  t.accepted = true;
  t.accept_prob = 1.0;
  return t;
}

}  // namespace mcx
