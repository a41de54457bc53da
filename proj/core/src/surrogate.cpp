#include "mcx/surrogate.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcx/classic.hpp"

namespace mcx {

namespace {

double se_kernel(const Vector& a, const Vector& b, double bandwidth) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

}  // namespace

double SurrogateModel::predict(const Vector& x) const {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < inputs_.rows(); ++j) {
    sum += weights_(j) * se_kernel(x, inputs_.row(j).transpose(), bandwidth_);
  }
  return sum;
}

double SurrogateModel::min_distance(const Vector& x) const {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < inputs_.rows(); ++j) {
    best = std::min(best, (inputs_.row(j).transpose() - x).norm());
  }
  return best;
}

double SurrogateModel::max_training_residual() const {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < inputs_.rows(); ++j) {
    worst = std::max(worst, std::abs(predict(inputs_.row(j).transpose()) - values_(j)));
  }
  return worst;
}

double SurrogateModel::fit_tolerance() const {
  return 10.0 * ridge_ * values_.cwiseAbs().maxCoeff();
}

SurrogateModel fit_surrogate(const Matrix& points, const Vector& logpi_values, double bandwidth,
                             double ridge) {
  const Eigen::Index m = points.rows();
  if (m < 2) throw InputError("fit_surrogate: at least two training points are required");
  if (logpi_values.size() != m) throw InputError("fit_surrogate: values and points disagree in length");
  if (!(bandwidth > 0.0) || !(ridge > 0.0)) {
    throw InputError("fit_surrogate: bandwidth and ridge must be positive");
  }
  if (!points.allFinite() || !logpi_values.allFinite()) {
    throw InputError("fit_surrogate: training data must be finite");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if ((points.row(i) - points.row(j)).norm() <= 1e-12) {
        throw InputError("fit_surrogate: duplicate training rows " + std::to_string(i) + " and " +
                         std::to_string(j));
      }
    }
  }

  Matrix gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    gram(i, i) = 1.0 + ridge;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double k = se_kernel(points.row(i).transpose(), points.row(j).transpose(), bandwidth);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw FitError("fit_surrogate: kernel system is singular; increase the ridge");
  }
  SurrogateModel model;
  model.weights_ = llt.solve(logpi_values);
  if (!model.weights_.allFinite()) {
    throw FitError("fit_surrogate: kernel system is numerically singular; increase the ridge");
  }
  model.inputs_ = points;
  model.values_ = logpi_values;
  model.bandwidth_ = bandwidth;
  model.ridge_ = ridge;
  return model;
}

SurrogatePrediction surrogate_predict(const SurrogateModel& model, const Vector& x,
                                      EvalCounters& counters) {
  ++counters.surrogate;
  return {model.predict(x), model.min_distance(x) > 3.0 * model.bandwidth()};
}

double surrogate_grid_error(const SurrogateModel& model, const TargetDensity& target,
                            const Vector& lower, const Vector& upper, std::size_t per_axis) {
  const auto dim = static_cast<std::size_t>(lower.size());
  std::size_t total = 1;
  for (std::size_t j = 0; j < dim; ++j) total *= per_axis;
  double worst = 0.0;
  Vector x(lower.size());
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (std::size_t j = 0; j < dim; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double t = per_axis == 1 ? 0.5
                                     : static_cast<double>(rem % per_axis) / static_cast<double>(per_axis - 1);
      x(jj) = lower(jj) + t * (upper(jj) - lower(jj));
      rem /= per_axis;
    }
    worst = std::max(worst, std::abs(model.predict(x) - target.log_density(x)));
  }
  return worst;
}

SurrogateModel refine_surrogate(const SurrogateModel& model, const Matrix& visited,
                                const Vector& visited_logpi, std::size_t n_new) {
  if (n_new == 0 || visited.rows() == 0) return model;
  if (visited.rows() != visited_logpi.size()) {
    throw InputError("refine_surrogate: visited positions and values disagree in length");
  }
  std::vector<std::pair<double, Eigen::Index>> scored;
  for (Eigen::Index i = 0; i < visited.rows(); ++i) {
    if (!std::isfinite(visited_logpi(i))) continue;
    const Vector x = visited.row(i).transpose();
    scored.emplace_back(std::abs(model.predict(x) - visited_logpi(i)), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<Eigen::Index> chosen;
  Matrix pool = model.inputs();
  for (const auto& [residual, row] : scored) {
    if (chosen.size() >= n_new) break;
    const Vector x = visited.row(row).transpose();
    bool duplicate = false;
    for (Eigen::Index j = 0; j < pool.rows() && !duplicate; ++j) {
      duplicate = (pool.row(j).transpose() - x).norm() <= 1e-12;
    }
    if (duplicate) continue;
    chosen.push_back(row);
    pool.conservativeResize(pool.rows() + 1, Eigen::NoChange);
    pool.row(pool.rows() - 1) = x.transpose();
  }
  if (chosen.empty()) return model;

  Vector values(pool.rows());
  values.head(model.values().size()) = model.values();
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    values(model.values().size() + static_cast<Eigen::Index>(k)) = visited_logpi(chosen[k]);
  }
  return fit_surrogate(pool, values, model.bandwidth(), model.ridge());
}

SurrogateModel refine_surrogate(const SurrogateModel& model, const ChainRecord& chain,
                                const TargetDensity& target, std::size_t n_new,
                                EvalCounters& counters) {
  if (chain.size() == 0) throw InputError("refine_surrogate: chain is empty");
  if (n_new == 0) return model;
  Vector values(chain.samples.rows());
  for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
    values(i) = target.log_density(chain.samples.row(i).transpose(), counters);
  }
  return refine_surrogate(model, chain.samples, values, n_new);
}

Transition delayed_acceptance_step(const ChainState& state, double sigma,
                                   const SurrogateModel& surrogate, const TargetDensity& target,
                                   RngStream& rng, EvalCounters& counters,
                                   DelayedAcceptanceStats* stats, bool approximate) {
  if (!(sigma > 0.0)) throw InputError("delayed_acceptance_step: sigma must be > 0");
  ChainState proposal;
  proposal.position = state.position;
  for (Eigen::Index i = 0; i < proposal.position.size(); ++i) {
    proposal.position(i) += sigma * rng.normal();
  }
  const double fast_cur = surrogate_predict(surrogate, state.position, counters).value;
  const double fast_prop = surrogate_predict(surrogate, proposal.position, counters).value;
  const double log_alpha1 = mh_accept_log_prob(fast_cur, fast_prop, 0.0, 0.0);
  if (stats != nullptr) ++stats->proposed;

  Transition t;
  bool screened = false;
  if (approximate) {
    proposal.cached_logpi = fast_prop;
    t.accept_prob = std::exp(log_alpha1);
    ChainState current = state;
    current.cached_logpi = fast_cur;
    t.state = accept_or_reject(current, proposal, log_alpha1, rng, &t.accepted);
    if (stats != nullptr && t.accepted) {
      ++stats->stage1_accepted;
      ++stats->stage2_accepted;
    }
    return t;
  }

  screened = std::log(rng.uniform()) < log_alpha1;
  if (!screened) {
    t.state = state;
    t.state.step_index = state.step_index + 1;
    t.accepted = false;
    t.accept_prob = 0.0;
    return t;
  }
  if (stats != nullptr) ++stats->stage1_accepted;

  proposal.cached_logpi = target.log_density(proposal.position, counters);
  // Stage-1 surrogate ratio plays the role of the proposal-density correction.
  const double log_alpha2 =
      mh_accept_log_prob(state.cached_logpi, proposal.cached_logpi, fast_prop, fast_cur);
  t.accept_prob = std::exp(log_alpha2);
  t.state = accept_or_reject(state, proposal, log_alpha2, rng, &t.accepted);
  if (t.accepted) t.state.cached_grad.reset();
  if (stats != nullptr && t.accepted) ++stats->stage2_accepted;
  return t;
}

}  // namespace mcx
