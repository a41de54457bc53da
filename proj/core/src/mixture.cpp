#include "mcx/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mcx {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

// K-vector of log w_k + log N(x; m_k, diag v_k).
Vector component_log_densities(const MixtureProposal& g, const Eigen::Ref<const Vector>& x) {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Vector out(g.weights.size());
  for (Eigen::Index k = 0; k < g.weights.size(); ++k) {
    double s = std::log(g.weights(k));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double v = g.variances(k, j);
      const double r = x(j) - g.means(k, j);
      s += -0.5 * (log_2pi + std::log(v)) - 0.5 * r * r / v;
    }
    out(k) = s;
  }
  return out;
}

}  // namespace

double MixtureProposal::log_density(const Vector& x) const {
  return log_sum_exp(component_log_densities(*this, x));
}

Vector MixtureProposal::sample(RngStream& rng) const {
  const double u = rng.uniform();
  Eigen::Index k = 0;
  double acc = weights(0);
  while (u >= acc && k + 1 < weights.size()) {
    ++k;
    acc += weights(k);
  }
  Vector x(means.cols());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    x(j) = means(k, j) + std::sqrt(variances(k, j)) * rng.normal();
  }
  return x;
}

namespace {

MixtureProposal fit_once(const Matrix& samples, std::size_t components, RngStream& rng,
                         const GmmOptions& options) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  const auto k_count = static_cast<Eigen::Index>(components);

  const Vector global_mean = samples.colwise().mean().transpose();
  Vector global_var =
      ((samples.rowwise() - global_mean.transpose()).array().square().colwise().sum() /
       static_cast<double>(n))
          .transpose();
  global_var = global_var.cwiseMax(options.variance_floor);

  // k-means++ seeding: first center uniform, the rest by squared distance.
  MixtureProposal g;
  g.means.resize(k_count, d);
  g.means.row(0) = samples.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Vector nearest = (samples.rowwise() - g.means.row(0)).rowwise().squaredNorm();
  for (Eigen::Index k = 1; k < k_count; ++k) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (pick = 0; pick < n - 1; ++pick) {
        acc += nearest(pick);
        if (acc > target) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    g.means.row(k) = samples.row(pick);
    nearest = nearest.cwiseMin((samples.rowwise() - g.means.row(k)).rowwise().squaredNorm());
  }
  g.variances = global_var.transpose().replicate(k_count, 1);
  g.weights = Vector::Constant(k_count, 1.0 / static_cast<double>(k_count));

  Matrix resp(n, k_count);
  Vector point_ll(n);
  double prev_ll = kNegInf;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // E-step
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector lc = component_log_densities(g, samples.row(i).transpose());
      const double lse = log_sum_exp(lc);
      point_ll(i) = lse;
      resp.row(i) = (lc.array() - lse).exp().transpose();
    }
    const double ll = point_ll.mean();
    g.log_likelihood_trace.push_back(ll);
    if (iter > 0 && ll - prev_ll < options.tolerance) break;
    prev_ll = ll;

    // M-step
    const Vector mass = resp.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (mass(k) < 1e-10) {
        // Empty component: reseed at the point the mixture explains worst.
        Eigen::Index worst = 0;
        point_ll.minCoeff(&worst);
        g.means.row(k) = samples.row(worst);
        g.variances.row(k) = global_var.transpose();
        g.weights(k) = 1.0 / static_cast<double>(n);
        continue;
      }
      g.weights(k) = mass(k) / static_cast<double>(n);
      const Vector mean = (resp.col(k).transpose() * samples).transpose() / mass(k);
      g.means.row(k) = mean.transpose();
      const Matrix centered = samples.rowwise() - mean.transpose();
      const Vector var =
          (resp.col(k).transpose() * centered.array().square().matrix()).transpose() / mass(k);
      g.variances.row(k) = var.cwiseMax(options.variance_floor).transpose();
    }
    g.weights /= g.weights.sum();
  }
  return g;
}

}  // namespace

MixtureProposal fit_gmm(const Matrix& samples, std::size_t components, RngStream& rng,
                        const GmmOptions& options) {
  const auto k_count = static_cast<Eigen::Index>(components);
  if (components == 0) throw InputError("fit_gmm: need at least one component");
  if (samples.rows() < 10 * k_count) throw InputError("fit_gmm: need at least 10 samples per component");
  if (!samples.allFinite()) throw InputError("fit_gmm: samples must be finite");
  if (options.restarts < 1) throw InputError("fit_gmm: restarts must be >= 1");

  MixtureProposal best;
  for (int r = 0; r < options.restarts; ++r) {
    MixtureProposal g = fit_once(samples, components, rng, options);
    if (r == 0 || g.log_likelihood_trace.back() > best.log_likelihood_trace.back()) best = std::move(g);
  }
  ++best.generation;
  return best;
}

Transition independence_proposal_step(const ChainState& state, const MixtureProposal& proposal,
                                      const TargetDensity& target, RngStream& rng,
                                      EvalCounters& counters) {
  ChainState candidate;
  candidate.position = proposal.sample(rng);
  candidate.cached_logpi = target.log_density(candidate.position, counters);
  const double logg_fwd = proposal.log_density(candidate.position);
  const double logg_bwd = proposal.log_density(state.position);
  const double log_alpha =
      mh_accept_log_prob(state.cached_logpi, candidate.cached_logpi, logg_fwd, logg_bwd);
  Transition t;
  t.accept_prob = std::exp(log_alpha);
  t.state = accept_or_reject(state, candidate, log_alpha, rng, &t.accepted);
  if (t.accepted) t.state.cached_grad.reset();
  return t;
}

}  // namespace mcx
