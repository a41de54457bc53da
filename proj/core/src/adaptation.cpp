#include "mcx/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Cholesky>

#include "mcx/design.hpp"
#include "mcx/diagnostics.hpp"
#include "mcx/gradient.hpp"
#include "mcx/kernels.hpp"

namespace mcx {

DualAveragingState DualAveragingState::start(double eps0, double target_accept) {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw InputError("dual averaging: eps0 must be finite and > 0");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw InputError("dual averaging: target_accept must lie in (0, 1)");
  }
  DualAveragingState da;
  da.log_eps = std::log(eps0);
  da.mu = std::log(10.0 * eps0);
  da.target_accept = target_accept;
  return da;
}

double DualAveragingState::step_size() const { return std::exp(log_eps); }
double DualAveragingState::final_step_size() const { return std::exp(log_eps_avg); }

DualAveragingState dual_averaging_update(DualAveragingState da, double observed_accept) {
  if (!(observed_accept >= 0.0 && observed_accept <= 1.0)) {
    throw InputError("dual averaging: observed acceptance must lie in [0, 1]");
  }
  const double m = static_cast<double>(da.iteration + 1);
  const double w = 1.0 / (m + da.t0);
  da.h_bar = (1.0 - w) * da.h_bar + w * (da.target_accept - observed_accept);
  da.log_eps = da.mu - std::sqrt(m) / da.gamma * da.h_bar;
  const double eta = std::pow(m, -da.kappa);
  da.log_eps_avg = eta * da.log_eps + (1.0 - eta) * da.log_eps_avg;
  da.iteration += 1;
  return da;
}

double one_step_accept_ratio(const Vector& q, const Vector& p, double epsilon,
                             const Vector& mass_diag, const TargetDensity& target) {
  EvalCounters scratch;
  const PhasePoint start{q, p};
  const double h0 = hamiltonian(start, mass_diag, target);
  const LeapfrogResult out = leapfrog(start, epsilon, 1, mass_diag, target, scratch);
  if (out.divergent) return 0.0;
  const double h1 = hamiltonian(out.point, mass_diag, target);
  const double r = std::exp(h0 - h1);
  return std::isfinite(r) ? r : (std::isnan(r) ? 0.0 : r);
}

StepSizeSearch find_reasonable_epsilon(const ChainState& state, const Vector& mass_diag,
                                       const TargetDensity& target, RngStream& rng,
                                       EvalCounters& counters, double initial_epsilon) {
  if (!target.has_gradient()) throw InputError("find_reasonable_epsilon requires a gradient");
  if (!(initial_epsilon > 0.0)) throw InputError("find_reasonable_epsilon: initial epsilon must be > 0");
  const auto d = state.position.size();
  const Vector mass = mass_diag.size() == 0 ? Vector::Ones(d) : mass_diag;

  StepSizeSearch out;
  out.momentum.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) out.momentum(i) = std::sqrt(mass(i)) * rng.normal();

  double eps = initial_epsilon;
  auto ratio_at = [&](double e) {
    counters.target += 1;
    counters.grad += 1;
    return one_step_accept_ratio(state.position, out.momentum, e, mass, target);
  };
  double ratio = ratio_at(eps);
  const int a = ratio > 0.5 ? 1 : -1;
  out.direction = a;
  while (std::pow(ratio, a) > std::pow(2.0, -a)) {
    if (out.iterations >= 100) {
      throw InitializationError("find_reasonable_epsilon: no crossing of 1/2 after 100 adjustments");
    }
    eps = a > 0 ? eps * 2.0 : eps * 0.5;
    ++out.iterations;
    ratio = ratio_at(eps);
  }
  out.epsilon = eps;
  return out;
}

Vector estimate_mass_diag(const Matrix& warmup_samples) {
  if (warmup_samples.rows() < 10) {
    throw InsufficientDataError("estimate_mass_diag needs at least 10 draws");
  }
  const double n = static_cast<double>(warmup_samples.rows());
  const Vector mean = warmup_samples.colwise().mean().transpose();
  Vector mass(warmup_samples.cols());
  for (Eigen::Index j = 0; j < warmup_samples.cols(); ++j) {
    const double var = (warmup_samples.col(j).array() - mean(j)).square().sum() / (n - 1.0);
    mass(j) = 1.0 / std::max(var, 1e-8);
  }
  return mass;
}

WarmupPlan plan_warmup(std::size_t n_warmup) {
  WarmupPlan plan;
  plan.n_warmup = n_warmup;
  plan.initial_end = (n_warmup * 15) / 100;
  plan.final_begin = n_warmup - (n_warmup * 25) / 100;
  const std::size_t slow = plan.final_begin - plan.initial_end;
  if (slow == 0) return plan;
  if (slow < 15) {
    plan.window_ends.push_back(plan.final_begin);
    return plan;
  }
  const std::size_t base = slow / 15;
  std::size_t end = plan.initial_end;
  for (std::size_t len = base; len <= 4 * base; len *= 2) {
    end += len;
    plan.window_ends.push_back(end);
  }
  plan.window_ends.back() = plan.final_begin;
  return plan;
}

// ---- tune_by_ess -----------------------------------------------------------

namespace {

double to_param(const TuningParameter& p, double u) {
  if (p.log_scale) return std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)));
  return p.lower + u * (p.upper - p.lower);
}

class UcbModel {
 public:
  UcbModel(const std::vector<Vector>& xs, const std::vector<double>& ys, double length)
      : xs_(xs), length_(length) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = ys[static_cast<std::size_t>(i)];
    mean_ = y.mean();
    sd_ = std::sqrt((y.array() - mean_).square().sum() / std::max<double>(1.0, static_cast<double>(n - 1)));
    if (!(sd_ > 0.0)) sd_ = 1.0;
    const Vector z = (y.array() - mean_) / sd_;
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) k(i, j) = kernel(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
    k.diagonal().array() += 3e-1;
    llt_.compute(k);
    alpha_ = llt_.solve(z);
  }

  double ucb(const Vector& x, double beta) const {
    const auto n = static_cast<Eigen::Index>(xs_.size());
    Vector ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(x, xs_[static_cast<std::size_t>(i)]);
    const double mu = ks.dot(alpha_);
    const double var = std::max(0.0, 1.0 - ks.dot(llt_.solve(ks)));
    return mu + beta * std::sqrt(var);
  }

  double mean(const Vector& x) const { return ucb(x, 0.0); }

 private:
  double kernel(const Vector& a, const Vector& b) const {
    return std::exp(-(a - b).squaredNorm() / (2.0 * length_ * length_));
  }

  std::vector<Vector> xs_;
  double length_;
  double mean_ = 0.0;
  double sd_ = 1.0;
  Eigen::LLT<Matrix> llt_;
  Vector alpha_;
};

TuningRecord evaluate_pilot(const TuningJob& job, const std::vector<double>& theta,
                            const TargetDensity& target, RngStream rng, std::size_t index) {
  SamplerSpec spec{job.sampler, job.fixed, {}};
  if (!spec.has("adapt")) spec.params["adapt"] = 0.0;
  for (std::size_t i = 0; i < job.box.size(); ++i) spec.params[job.box[i].name] = theta[i];

  TuningRecord rec;
  rec.eval_index = index;
  rec.theta = theta;
  rec.objective = -std::numeric_limits<double>::infinity();
  try {
    auto kernel = make_kernel(spec, target);
    const Vector init = initial_position(target, InitSpec{}, rng);
    const std::size_t burn = job.pilot_length / 5;
    ChainRecord chain = run_chain(*kernel, target, init, burn, job.pilot_length, rng);
    rec.accept_rate = chain.acceptance_rate();
    rec.divergences = chain.divergences();
    double min_ess = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
      try {
        min_ess = std::min(min_ess, ess(chain.samples.col(j)));
      } catch (const DegenerateChainError&) {
        // stuck chain
        min_ess = 0.0;
        break;
      }
    }
    rec.min_ess = min_ess;
    const bool all_divergent = rec.divergences == job.pilot_length;
    if (!all_divergent && min_ess >= 2.0) {
      if (job.objective == TuningObjective::min_ess) {
        rec.objective = min_ess;
      } else {
        const double g = static_cast<double>(std::max<std::uint64_t>(1, chain.sampling_counters.grad));
        rec.objective = min_ess / g;
      }
    }
  } catch (const ProposalError&) {
  } catch (const InitializationError&) {
  } catch (const InvalidStateError&) {
  }
  return rec;
}

}  // namespace

TuningResult tune_by_ess(const TuningJob& job, const TargetDensity& target, RngStream& rng) {
  if (job.budget < 2) throw InputError("tune_by_ess: budget must be >= 2");
  if (job.box.empty()) throw InputError("tune_by_ess: empty hyperparameter box");
  if (job.pilot_length < 10) throw InputError("tune_by_ess: pilot_length must be >= 10");
  for (const auto& p : job.box) {
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper)) {
      throw InputError("tune_by_ess: bounds of '" + p.name + "' must be finite with lower < upper");
    }
    if (p.log_scale && !(p.lower > 0.0)) {
      throw InputError("tune_by_ess: log-scaled '" + p.name + "' needs a positive lower bound");
    }
  }
  const double total = static_cast<double>(job.budget) * static_cast<double>(job.pilot_length) * 1.2;
  if (total > job.max_total_steps) {
    throw InputError("tune_by_ess: budget x pilot_length exceeds the compute guard");
  }

  const std::size_t p = job.box.size();
  const std::size_t n_initial = std::min(job.budget, std::max<std::size_t>(2, job.budget / 4));
  const double length = 0.15 * std::sqrt(static_cast<double>(p));

  std::vector<Vector> us;
  std::vector<double> ys;
  TuningResult result;

  auto evaluate = [&](const Vector& u) {
    std::vector<double> theta(p);
    for (std::size_t i = 0; i < p; ++i) theta[i] = to_param(job.box[i], u(static_cast<Eigen::Index>(i)));
    const std::size_t index = result.trace.size();
    result.trace.push_back(evaluate_pilot(job, theta, target, rng.substream(index), index));
    us.push_back(u);
  };

  for (std::size_t i = 0; i < n_initial; ++i) evaluate(halton_point(i + 1, p));

  // GP on log objective; failed pilots sit one unit below the worst success
  auto refresh = [&] {
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& r : result.trace)
      if (std::isfinite(r.objective)) floor = std::min(floor, std::log(r.objective));
    floor = std::isfinite(floor) ? floor - 1.0 : 0.0;
    ys.clear();
    for (const auto& r : result.trace) ys.push_back(std::isfinite(r.objective) ? std::log(r.objective) : floor);
  };

  constexpr std::size_t kCandidates = 512;
  while (result.trace.size() < job.budget) {
    refresh();
    const UcbModel model(us, ys, length);
    double best_score = -std::numeric_limits<double>::infinity();
    Vector best_u;
    for (std::size_t c = 0; c < kCandidates; ++c) {
      const Vector u = halton_point(1000 + c, p);
      bool seen = false;
      for (const auto& v : us) seen = seen || (u - v).norm() < 1e-9;
      if (seen) continue;
      const double score = model.ucb(u, 2.0);
      if (score > best_score) {
        best_score = score;
        best_u = u;
      }
    }
    evaluate(best_u);
  }

  // pick the evaluated point with the best smoothed objective, not the luckiest pilot
  refresh();
  const UcbModel model(us, ys, length);
  const TuningRecord* best = nullptr;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& r = result.trace[i];
    if (!std::isfinite(r.objective)) continue;
    const double m = model.mean(us[i]);
    if (best == nullptr || m > best_mean) {
      best = &r;
      best_mean = m;
    }
  }
  if (best == nullptr) {
    throw TuningFailedError("tune_by_ess: every pilot diverged or produced ESS below 2", result.trace);
  }
  result.best_record = *best;
  for (std::size_t i = 0; i < p; ++i) result.best[job.box[i].name] = best->theta[i];
  return result;
}

void write_tuning_trace_csv(std::ostream& out, const TuningJob& job, const TuningResult& result) {
  out << "eval_index";
  for (const auto& p : job.box) out << ',' << p.name;
  out << ",objective,accept_rate,divergences\n";
  out.precision(10);
  for (const auto& r : result.trace) {
    out << r.eval_index;
    for (double t : r.theta) out << ',' << t;
    out << ',' << r.objective << ',' << r.accept_rate << ',' << r.divergences << '\n';
  }
}

}  // namespace mcx
