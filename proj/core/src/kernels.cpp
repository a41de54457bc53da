#include "mcx/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <thread>

#include "mcx/classic.hpp"
#include "mcx/design.hpp"
#include "mcx/gradient.hpp"
#include "mcx/mixture.hpp"
#include "mcx/surrogate.hpp"

namespace mcx {

double SamplerSpec::get(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string SamplerSpec::option(const std::string& key, const std::string& fallback) const {
  const auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

namespace {

std::uint64_t bits_of(double v) {
  std::uint64_t b = 0;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  std::uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}

std::uint64_t hash_string(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) h = hash_combine(h, c);
  return h;
}

std::uint64_t hash_vector(std::uint64_t h, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) h = hash_combine(h, bits_of(v(i)));
  return h;
}

std::uint64_t hash_matrix(std::uint64_t h, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) h = hash_combine(h, bits_of(m.data()[i]));
  return h;
}

bool adaptation_enabled(const SamplerSpec& spec) { return spec.get("adapt", 1.0) != 0.0; }

/// Dual averaging on one step-size-like hyperparameter.
class StepAdapter {
 public:
  StepAdapter() = default;
  StepAdapter(bool enabled, double target_accept) : enabled_(enabled), target_(target_accept) {}

  bool enabled() const { return enabled_; }
  void restart(double eps0) { da_ = DualAveragingState::start(eps0, target_); }
  double update(double observed) {
    da_ = dual_averaging_update(da_, std::clamp(observed, 0.0, 1.0));
    return da_.step_size();
  }
  double frozen(double fallback) const { return da_.iteration > 0 ? da_.final_step_size() : fallback; }
  double target() const { return target_; }

 private:
  bool enabled_ = false;
  double target_ = 0.5;
  DualAveragingState da_;
};

// ---- random-walk Metropolis ----------------------------------------------

class RwmKernel final : public Kernel {
 public:
  RwmKernel(const SamplerSpec& spec, const TargetDensity& target)
      : target_(target),
        sigma_(spec.get("sigma", 2.38 / std::sqrt(static_cast<double>(target.dim())))),
        adapter_(adaptation_enabled(spec) && !spec.has("sigma"), spec.get("target_accept", 0.234)) {
    if (!(sigma_ > 0.0)) throw InputError("rwm: sigma must be > 0");
  }

  std::string name() const override { return "rwm"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    return rwm_step(state, RwmConfig{sigma_}, target_, rng, counters);
  }
  void begin_warmup(const ChainState&, std::size_t, RngStream&, EvalCounters&) override {
    if (adapter_.enabled()) adapter_.restart(sigma_);
  }
  void warmup_update(std::size_t, const Transition& t, RngStream&, EvalCounters&) override {
    if (adapter_.enabled()) sigma_ = adapter_.update(t.accept_prob);
  }
  void end_warmup() override {
    if (adapter_.enabled()) sigma_ = adapter_.frozen(sigma_);
  }
  std::map<std::string, double> parameters() const override {
    return {{"sigma", sigma_}, {"target_accept", adapter_.target()}};
  }

 private:
  TargetDensity target_;
  double sigma_;
  StepAdapter adapter_;
};

// ---- MALA -----------------------------------------------------------------

class MalaKernel final : public Kernel {
 public:
  MalaKernel(const SamplerSpec& spec, const TargetDensity& target)
      : target_(target),
        epsilon_(spec.get("epsilon", std::pow(static_cast<double>(target.dim()), -1.0 / 6.0))),
        adapter_(adaptation_enabled(spec) && !spec.has("epsilon"), spec.get("target_accept", 0.574)) {
    if (!target.has_gradient()) throw InputError("mala requires a gradient");
    if (!(epsilon_ > 0.0)) throw InputError("mala: epsilon must be > 0");
  }

  std::string name() const override { return "mala"; }
  bool needs_gradient() const override { return true; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    return mala_step(state, epsilon_, target_, rng, counters);
  }
  void begin_warmup(const ChainState&, std::size_t, RngStream&, EvalCounters&) override {
    if (adapter_.enabled()) adapter_.restart(epsilon_);
  }
  void warmup_update(std::size_t, const Transition& t, RngStream&, EvalCounters&) override {
    if (adapter_.enabled()) epsilon_ = adapter_.update(t.accept_prob);
  }
  void end_warmup() override {
    if (adapter_.enabled()) epsilon_ = adapter_.frozen(epsilon_);
  }
  std::map<std::string, double> parameters() const override {
    return {{"epsilon", epsilon_}, {"target_accept", adapter_.target()}};
  }

 private:
  TargetDensity target_;
  double epsilon_;
  StepAdapter adapter_;
};

// ---- HMC and NUTS ---------------------------------------------------------

/// Shared warmup for the Hamiltonian kernels: step size by dual averaging
/// throughout, diagonal mass re-estimated at the end of each slow window.
class HamiltonianKernel : public Kernel {
 public:
  HamiltonianKernel(const SamplerSpec& spec, const TargetDensity& target, double default_accept)
      : target_(target),
        epsilon_(spec.get("epsilon", 0.1)),
        mass_(Vector::Ones(static_cast<Eigen::Index>(target.dim()))),
        adapter_(adaptation_enabled(spec) && !spec.has("epsilon"),
                 spec.get("target_accept", default_accept)),
        adapt_mass_(adaptation_enabled(spec) && spec.get("adapt_mass", 1.0) != 0.0) {
    if (!target.has_gradient()) throw InputError(spec.name + " requires a gradient");
    if (!(epsilon_ > 0.0)) throw InputError(spec.name + ": epsilon must be > 0");
  }

  bool needs_gradient() const override { return true; }

  void begin_warmup(const ChainState& state, std::size_t n_warmup, RngStream& rng,
                    EvalCounters& counters) override {
    plan_ = plan_warmup(n_warmup);
    window_.clear();
    next_window_ = 0;
    if (adapter_.enabled()) {
      epsilon_ = find_reasonable_epsilon(state, mass_, target_, rng, counters).epsilon;
      adapter_.restart(epsilon_);
    }
  }

  void warmup_update(std::size_t iteration, const Transition& t, RngStream& rng,
                     EvalCounters& counters) override {
    if (adapter_.enabled()) epsilon_ = adapter_.update(t.accept_prob);
    if (!adapt_mass_ || iteration < plan_.initial_end || next_window_ >= plan_.window_ends.size()) {
      return;
    }
    window_.push_back(t.state.position);
    if (iteration + 1 != plan_.window_ends[next_window_]) return;
    ++next_window_;
    if (window_.size() >= 10) {
      Matrix draws(static_cast<Eigen::Index>(window_.size()), static_cast<Eigen::Index>(target_.dim()));
      for (std::size_t i = 0; i < window_.size(); ++i) draws.row(static_cast<Eigen::Index>(i)) = window_[i].transpose();
      mass_ = estimate_mass_diag(draws);
      if (adapter_.enabled()) {
        try {
          epsilon_ = find_reasonable_epsilon(t.state, mass_, target_, rng, counters, epsilon_).epsilon;
        } catch (const InitializationError&) {
          // keep the current step size
        }
        adapter_.restart(epsilon_);
      }
    }
    window_.clear();
  }

  void end_warmup() override {
    if (adapter_.enabled()) epsilon_ = adapter_.frozen(epsilon_);
    window_.clear();
  }

  std::uint64_t parameter_hash() const override {
    return hash_vector(Kernel::parameter_hash(), mass_);
  }

 protected:
  std::map<std::string, double> common_parameters() const {
    return {{"epsilon", epsilon_},
            {"target_accept", adapter_.target()},
            {"mass_min", mass_.minCoeff()},
            {"mass_max", mass_.maxCoeff()}};
  }

  TargetDensity target_;
  double epsilon_;
  Vector mass_;
  StepAdapter adapter_;
  bool adapt_mass_;
  WarmupPlan plan_;
  std::vector<Vector> window_;
  std::size_t next_window_ = 0;
};

class HmcKernel final : public HamiltonianKernel {
 public:
  HmcKernel(const SamplerSpec& spec, const TargetDensity& target)
      : HamiltonianKernel(spec, target, 0.65),
        n_leapfrog_(static_cast<int>(spec.get("n_leapfrog", 10))) {
    if (n_leapfrog_ < 1) throw InputError("hmc: n_leapfrog must be >= 1");
  }
  std::string name() const override { return "hmc"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    return hmc_step(state, HmcConfig{epsilon_, n_leapfrog_, mass_}, target_, rng, counters);
  }
  std::map<std::string, double> parameters() const override {
    auto p = common_parameters();
    p["n_leapfrog"] = n_leapfrog_;
    return p;
  }

 private:
  int n_leapfrog_;
};

class NutsKernel final : public HamiltonianKernel {
 public:
  NutsKernel(const SamplerSpec& spec, const TargetDensity& target)
      : HamiltonianKernel(spec, target, 0.8),
        max_depth_(static_cast<int>(spec.get("max_tree_depth", 10))) {
    if (max_depth_ < 1 || max_depth_ > 20) throw InputError("nuts: max_tree_depth must lie in [1, 20]");
  }
  std::string name() const override { return "nuts"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    return nuts_step(state, NutsConfig{epsilon_, mass_, max_depth_}, target_, rng, counters);
  }
  std::map<std::string, double> parameters() const override {
    auto p = common_parameters();
    p["max_tree_depth"] = max_depth_;
    return p;
  }

 private:
  int max_depth_;
};

// ---- Gibbs and Metropolis-within-Gibbs ------------------------------------

class GibbsKernel final : public Kernel {
 public:
  explicit GibbsKernel(const TargetDensity& target) : target_(target) {
    if (!target.fcd_support() || !target.analytic_mean() || !target.analytic_cov()) {
      throw InputError("gibbs requires tractable full conditionals; use mwg for '" + target.name() + "'");
    }
    fcds_ = FullConditionalSet::gaussian(*target.analytic_mean(), *target.analytic_cov());
  }
  std::string name() const override { return "gibbs"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    return gibbs_step(state, fcds_, target_, rng, counters);
  }
  std::map<std::string, double> parameters() const override { return {{"scan", 0.0}}; }

 private:
  TargetDensity target_;
  FullConditionalSet fcds_;
};

class MwgKernel final : public Kernel {
 public:
  MwgKernel(const SamplerSpec& spec, const TargetDensity& target)
      : target_(target),
        sigmas_(Vector::Constant(static_cast<Eigen::Index>(target.dim()), spec.get("sigma", 1.0))),
        adapt_(adaptation_enabled(spec) && !spec.has("sigma")),
        target_accept_(spec.get("target_accept", 0.44)) {
    fcds_ = FullConditionalSet::metropolis(sigmas_);
  }
  std::string name() const override { return "mwg"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    last_accepted_ = stats_.accepted;
    return gibbs_step(state, fcds_, target_, rng, counters, &stats_);
  }
  void begin_warmup(const ChainState&, std::size_t, RngStream&, EvalCounters&) override {
    if (!adapt_) return;
    adapters_.clear();
    for (Eigen::Index i = 0; i < sigmas_.size(); ++i) {
      adapters_.emplace_back(true, target_accept_);
      adapters_.back().restart(sigmas_(i));
    }
  }
  void warmup_update(std::size_t, const Transition&, RngStream&, EvalCounters&) override {
    if (!adapt_) return;
    for (std::size_t i = 0; i < adapters_.size(); ++i) {
      const double hit = last_accepted_.size() == stats_.accepted.size() &&
                                 stats_.accepted[i] > last_accepted_[i]
                             ? 1.0
                             : (last_accepted_.empty() && stats_.accepted[i] > 0 ? 1.0 : 0.0);
      sigmas_(static_cast<Eigen::Index>(i)) = adapters_[i].update(hit);
    }
    fcds_ = FullConditionalSet::metropolis(sigmas_);
  }
  void end_warmup() override {
    if (adapt_) {
      for (std::size_t i = 0; i < adapters_.size(); ++i)
        sigmas_(static_cast<Eigen::Index>(i)) = adapters_[i].frozen(sigmas_(static_cast<Eigen::Index>(i)));
      fcds_ = FullConditionalSet::metropolis(sigmas_);
    }
    stats_ = GibbsSlotStats{};
  }
  std::map<std::string, double> parameters() const override {
    return {{"sigma_min", sigmas_.minCoeff()}, {"sigma_max", sigmas_.maxCoeff()},
            {"target_accept", target_accept_}};
  }
  std::map<std::string, double> stats() const override {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < stats_.proposed.size(); ++i) {
      out["slot_accept_" + std::to_string(i)] = stats_.rate(i);
    }
    return out;
  }
  std::uint64_t parameter_hash() const override {
    return hash_vector(Kernel::parameter_hash(), sigmas_);
  }

 private:
  TargetDensity target_;
  Vector sigmas_;
  bool adapt_;
  double target_accept_;
  FullConditionalSet fcds_;
  GibbsSlotStats stats_;
  std::vector<std::uint64_t> last_accepted_;
  std::vector<StepAdapter> adapters_;
};

// ---- surrogate delayed acceptance ------------------------------------------

class DelayedAcceptanceKernel final : public Kernel {
 public:
  DelayedAcceptanceKernel(const SamplerSpec& spec, const TargetDensity& target)
      : target_(target),
        sigma_(spec.get("sigma", 2.38 / std::sqrt(static_cast<double>(target.dim())))),
        adapter_(adaptation_enabled(spec) && !spec.has("sigma"), spec.get("target_accept", 0.234)),
        bandwidth_(spec.get("bandwidth", 1.5)),
        ridge_(spec.get("ridge", 1e-3)),
        training_budget_(static_cast<std::size_t>(spec.get("training_budget", 200))),
        refinement_rounds_(static_cast<std::size_t>(spec.get("refinement_rounds", 0))),
        refine_points_(static_cast<std::size_t>(spec.get("refine_points", 20))),
        approximate_(spec.get("approximate", 0.0) != 0.0) {
    if (training_budget_ < 2) throw InputError("da_rwm: training_budget must be >= 2");
    fit_initial_surrogate();
  }

  std::string name() const override { return "da_rwm"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    return delayed_acceptance_step(state, sigma_, surrogate_, target_, rng, counters, &stats_,
                                   approximate_);
  }
  void begin_warmup(const ChainState&, std::size_t n_warmup, RngStream&,
                    EvalCounters& counters) override {
    counters.target += training_cost_;
    training_cost_ = 0;
    if (adapter_.enabled()) adapter_.restart(sigma_);
    n_warmup_ = n_warmup;
    visited_.clear();
    visited_logpi_.clear();
    rounds_done_ = 0;
  }
  void warmup_update(std::size_t iteration, const Transition& t, RngStream&, EvalCounters&) override {
    if (adapter_.enabled()) sigma_ = adapter_.update(t.accept_prob);
    if (refinement_rounds_ == 0 || approximate_) return;
    if (t.accepted) {
      visited_.push_back(t.state.position);
      visited_logpi_.push_back(t.state.cached_logpi);
    }
    const std::size_t every = std::max<std::size_t>(1, n_warmup_ / (refinement_rounds_ + 1));
    if ((iteration + 1) % every == 0 && rounds_done_ < refinement_rounds_ && !visited_.empty()) {
      Matrix pts(static_cast<Eigen::Index>(visited_.size()), static_cast<Eigen::Index>(target_.dim()));
      Vector vals(static_cast<Eigen::Index>(visited_.size()));
      for (std::size_t i = 0; i < visited_.size(); ++i) {
        pts.row(static_cast<Eigen::Index>(i)) = visited_[i].transpose();
        vals(static_cast<Eigen::Index>(i)) = visited_logpi_[i];
      }
      surrogate_ = refine_surrogate(surrogate_, pts, vals, refine_points_);
      visited_.clear();
      visited_logpi_.clear();
      ++rounds_done_;
    }
  }
  void end_warmup() override {
    if (adapter_.enabled()) sigma_ = adapter_.frozen(sigma_);
    visited_.clear();
    visited_logpi_.clear();
    stats_ = DelayedAcceptanceStats{};
  }
  std::map<std::string, double> parameters() const override {
    return {{"sigma", sigma_},
            {"target_accept", adapter_.target()},
            {"bandwidth", bandwidth_},
            {"ridge", ridge_},
            {"surrogate_points", static_cast<double>(surrogate_.size())},
            {"approximate", approximate_ ? 1.0 : 0.0}};
  }
  std::map<std::string, double> stats() const override {
    return {{"stage1_accept", stats_.stage1_rate()},
            {"stage2_accept", stats_.stage2_rate()},
            {"surrogate_grid_error",
             surrogate_grid_error(surrogate_, target_, target_.box_lower(), target_.box_upper(),
                                  target_.dim() <= 2 ? 21 : 3)}};
  }
  std::uint64_t parameter_hash() const override {
    std::uint64_t h = hash_vector(Kernel::parameter_hash(), surrogate_.weights());
    return hash_matrix(h, surrogate_.inputs());
  }

 private:
  void fit_initial_surrogate() {
    const Matrix design = grid_design(target_.box_lower(), target_.box_upper(), training_budget_);
    std::vector<Eigen::Index> keep;
    Vector values(design.rows());
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
      values(i) = target_.log_density(design.row(i).transpose());
      ++training_cost_;
      if (std::isfinite(values(i))) keep.push_back(i);
    }
    Matrix pts(static_cast<Eigen::Index>(keep.size()), design.cols());
    Vector vals(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      pts.row(static_cast<Eigen::Index>(k)) = design.row(keep[k]);
      vals(static_cast<Eigen::Index>(k)) = values(keep[k]);
    }
    surrogate_ = fit_surrogate(pts, vals, bandwidth_, ridge_);
  }

  TargetDensity target_;
  double sigma_;
  StepAdapter adapter_;
  double bandwidth_;
  double ridge_;
  std::size_t training_budget_;
  std::size_t refinement_rounds_;
  std::size_t refine_points_;
  bool approximate_;
  SurrogateModel surrogate_;
  std::uint64_t training_cost_ = 0;
  DelayedAcceptanceStats stats_;
  std::size_t n_warmup_ = 0;
  std::size_t rounds_done_ = 0;
  std::vector<Vector> visited_;
  std::vector<double> visited_logpi_;
};

// ---- mixture independence proposal ----------------------------------------

class GmmIndependenceKernel final : public Kernel {
 public:
  GmmIndependenceKernel(const SamplerSpec& spec, const TargetDensity& target)
      : target_(target),
        components_(static_cast<std::size_t>(spec.get("components", 2))),
        pilot_chains_(static_cast<std::size_t>(spec.get("pilot_chains", 8))),
        pilot_length_(static_cast<std::size_t>(spec.get("pilot_length", 2000))),
        source_(spec.option("warmup_source", "overdispersed")) {
    options_.max_iterations = static_cast<int>(spec.get("em_max_iterations", 200));
    options_.tolerance = spec.get("em_tolerance", 1e-8);
    if (components_ < 1) throw InputError("gmm_independence: components must be >= 1");
    if (pilot_chains_ < 1 || pilot_length_ < 20) {
      throw InputError("gmm_independence: need pilot_chains >= 1 and pilot_length >= 20");
    }
    if (source_ != "overdispersed" && source_ != "single") {
      throw InputError("gmm_independence: warmup_source must be 'overdispersed' or 'single'");
    }
  }

  std::string name() const override { return "gmm_independence"; }
  Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) override {
    if (proposal_.components() == 0) throw InputError("gmm_independence: mixture not fitted (no warmup)");
    return independence_proposal_step(state, proposal_, target_, rng, counters);
  }

  void begin_warmup(const ChainState& state, std::size_t, RngStream& rng,
                    EvalCounters& counters) override {
    const bool single = source_ == "single";
    const std::size_t chains = single ? 1 : pilot_chains_;
    const std::size_t length = single ? pilot_chains_ * pilot_length_ : pilot_length_;
    const std::size_t half = length / 2;
    Matrix pooled(static_cast<Eigen::Index>(chains * (length - half)),
                  static_cast<Eigen::Index>(target_.dim()));
    SamplerSpec pilot_spec{"rwm", {}, {}};
    for (std::size_t c = 0; c < chains; ++c) {
      RngStream sub = rng.substream(1000 + c);
      const Vector init = single ? state.position
                                 : initial_position(target_, InitSpec{InitMode::overdispersed, {}}, sub);
      RwmKernel pilot(pilot_spec, target_);
      ChainRecord rec = run_chain(pilot, target_, init, half, length - half, sub);
      counters += rec.counters;
      pooled.middleRows(static_cast<Eigen::Index>(c * (length - half)),
                        static_cast<Eigen::Index>(length - half)) = rec.samples;
    }
    RngStream fit_rng = rng.substream(999);
    proposal_ = fit_gmm(pooled, components_, fit_rng, options_);
  }

  std::map<std::string, double> parameters() const override {
    std::map<std::string, double> p{{"components", static_cast<double>(components_)},
                                    {"generation", static_cast<double>(proposal_.generation)}};
    for (std::size_t k = 0; k < proposal_.components(); ++k) {
      p["weight_" + std::to_string(k)] = proposal_.weights(static_cast<Eigen::Index>(k));
      p["mean0_" + std::to_string(k)] = proposal_.means(static_cast<Eigen::Index>(k), 0);
    }
    return p;
  }
  std::uint64_t parameter_hash() const override {
    std::uint64_t h = hash_vector(Kernel::parameter_hash(), proposal_.weights);
    h = hash_matrix(h, proposal_.means);
    return hash_matrix(h, proposal_.variances);
  }
  const MixtureProposal& proposal() const { return proposal_; }

 private:
  TargetDensity target_;
  std::size_t components_;
  std::size_t pilot_chains_;
  std::size_t pilot_length_;
  std::string source_;
  GmmOptions options_;
  MixtureProposal proposal_;
};

}  // namespace

std::uint64_t Kernel::parameter_hash() const {
  std::uint64_t h = hash_string(0x6a09e667f3bcc908ULL, name());
  for (const auto& [k, v] : parameters()) {
    h = hash_string(h, k);
    h = hash_combine(h, bits_of(v));
  }
  return h;
}

const std::vector<std::string>& kernel_names() {
  static const std::vector<std::string> names{"rwm", "mala",  "hmc",    "nuts",
                                              "gibbs", "mwg", "da_rwm", "gmm_independence"};
  return names;
}

std::string step_size_parameter(const std::string& sampler) {
  if (sampler == "rwm" || sampler == "da_rwm" || sampler == "mwg") return "sigma";
  if (sampler == "mala" || sampler == "hmc" || sampler == "nuts") return "epsilon";
  return "";
}

std::unique_ptr<Kernel> make_kernel(const SamplerSpec& spec, const TargetDensity& target) {
  if (spec.name == "rwm") return std::make_unique<RwmKernel>(spec, target);
  if (spec.name == "mala") return std::make_unique<MalaKernel>(spec, target);
  if (spec.name == "hmc") return std::make_unique<HmcKernel>(spec, target);
  if (spec.name == "nuts") return std::make_unique<NutsKernel>(spec, target);
  if (spec.name == "gibbs") return std::make_unique<GibbsKernel>(target);
  if (spec.name == "mwg") return std::make_unique<MwgKernel>(spec, target);
  if (spec.name == "da_rwm") return std::make_unique<DelayedAcceptanceKernel>(spec, target);
  if (spec.name == "gmm_independence") return std::make_unique<GmmIndependenceKernel>(spec, target);
  throw InputError("unknown sampler '" + spec.name + "'");
}

Vector initial_position(const TargetDensity& target, const InitSpec& init, RngStream& rng) {
  const auto d = static_cast<Eigen::Index>(target.dim());
  switch (init.mode) {
    case InitMode::zero:
      return Vector::Zero(d);
    case InitMode::explicit_point:
      if (init.point.size() != d) throw InputError("initial point has the wrong dimension");
      return init.point;
    case InitMode::overdispersed: {
      Vector x(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double lo = target.box_lower()(i);
        const double hi = target.box_upper()(i);
        x(i) = lo + (hi - lo) * rng.uniform();
      }
      return x;
    }
  }
  return Vector::Zero(d);
}

ChainRecord run_chain(Kernel& kernel, const TargetDensity& target, const Vector& init,
                      std::size_t n_warmup, std::size_t n_samples, RngStream& rng) {
  const auto start = std::chrono::steady_clock::now();
  EvalCounters counters;
  ChainState state = make_state(target, init, counters, kernel.needs_gradient());

  ChainRecord rec;
  rec.warmup_accept_prob.reserve(n_warmup);
  kernel.begin_warmup(state, n_warmup, rng, counters);
  for (std::size_t i = 0; i < n_warmup; ++i) {
    Transition t = kernel.step(state, rng, counters);
    rec.warmup_accept_prob.push_back(t.accept_prob);
    kernel.warmup_update(i, t, rng, counters);
    state = std::move(t.state);
  }
  kernel.end_warmup();
  const EvalCounters warm = counters;
  rec.kernel_hash = kernel.parameter_hash();

  const auto n = static_cast<Eigen::Index>(n_samples);
  rec.samples.resize(n, static_cast<Eigen::Index>(target.dim()));
  rec.accept_flags.resize(n_samples);
  rec.divergent.resize(n_samples);
  rec.accept_prob.resize(n_samples);
  rec.tree_depth.resize(n_samples);
  rec.n_leapfrog.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Transition t = kernel.step(state, rng, counters);
    const auto row = static_cast<Eigen::Index>(i);
    rec.samples.row(row) = t.state.position.transpose();
    rec.accept_flags[i] = t.accepted ? 1 : 0;
    rec.divergent[i] = t.divergent ? 1 : 0;
    rec.accept_prob[i] = t.accept_prob;
    rec.tree_depth[i] = t.tree_depth;
    rec.n_leapfrog[i] = t.n_leapfrog;
    state = std::move(t.state);
  }
  rec.counters = counters;
  rec.sampling_counters.target = counters.target - warm.target;
  rec.sampling_counters.grad = counters.grad - warm.grad;
  rec.sampling_counters.surrogate = counters.surrogate - warm.surrogate;
  rec.kernel_parameters = kernel.parameters();
  rec.kernel_stats = kernel.stats();
  if (kernel.parameter_hash() != rec.kernel_hash) {
    throw InvalidStateError("kernel '" + kernel.name() + "' changed after warmup");
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<ChainRecord> run_chains(const SamplerSpec& spec, const TargetDensity& target,
                                    const ChainRunOptions& options) {
  if (options.n_chains < 1) throw InputError("run_chains: need at least one chain");
  std::vector<ChainRecord> records(options.n_chains);
  auto run_one = [&](std::size_t c) {
    RngStream rng(options.seed, c);
    auto kernel = make_kernel(spec, target);
    const Vector init = initial_position(target, options.init, rng);
    records[c] = run_chain(*kernel, target, init, options.n_warmup, options.n_samples, rng);
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, options.n_chains);
  if (workers == 1) {
    for (std::size_t c = 0; c < options.n_chains; ++c) run_one(c);
    return records;
  }
  std::vector<std::exception_ptr> errors(options.n_chains);
  std::vector<std::jthread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < options.n_chains; c = next++) {
        try {
          run_one(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return records;
}

}  // namespace mcx
