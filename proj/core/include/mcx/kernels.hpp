#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mcx/adaptation.hpp"
#include "mcx/core.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Sampler name plus hyperparameters. A numeric hyperparameter that is given
/// is held fixed; one that is omitted is adapted during warmup (unless
/// `adapt` is 0, in which case defaults are used as-is).
struct SamplerSpec {
  std::string name;
  std::map<std::string, double> params;
  std::map<std::string, std::string> options;

  double get(const std::string& key, double fallback) const;
  bool has(const std::string& key) const { return params.count(key) > 0; }
  std::string option(const std::string& key, const std::string& fallback) const;
};

/// One Markov kernel bound to one chain. Warmup hooks may change the kernel;
/// after end_warmup() it is frozen and parameter_hash() must not change.
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual std::string name() const = 0;
  virtual bool needs_gradient() const { return false; }
  virtual Transition step(const ChainState& state, RngStream& rng, EvalCounters& counters) = 0;

  virtual void begin_warmup(const ChainState& /*state*/, std::size_t /*n_warmup*/,
                            RngStream& /*rng*/, EvalCounters& /*counters*/) {}
  virtual void warmup_update(std::size_t /*iteration*/, const Transition& /*transition*/,
                             RngStream& /*rng*/, EvalCounters& /*counters*/) {}
  virtual void end_warmup() {}

  /// Current hyperparameters (step sizes, masses, counts).
  virtual std::map<std::string, double> parameters() const = 0;
  /// Sampler-specific statistics accumulated so far.
  virtual std::map<std::string, double> stats() const { return {}; }
  /// Hash of everything that defines the transition kernel.
  virtual std::uint64_t parameter_hash() const;
};

/// Known names: rwm, mala, hmc, nuts, gibbs, mwg, da_rwm, gmm_independence.
std::unique_ptr<Kernel> make_kernel(const SamplerSpec& spec, const TargetDensity& target);

/// Names accepted by make_kernel.
const std::vector<std::string>& kernel_names();

/// Hyperparameters that tune_by_ess and the scaling study treat as "the"
/// step size of each sampler.
std::string step_size_parameter(const std::string& sampler);

enum class InitMode { overdispersed, zero, explicit_point };

struct InitSpec {
  InitMode mode = InitMode::overdispersed;
  Vector point;  // used with explicit_point
};

/// Overdispersed: uniform over the target's box; zero: the origin.
Vector initial_position(const TargetDensity& target, const InitSpec& init, RngStream& rng);

/// Runs warmup then `n_samples` recorded transitions.
ChainRecord run_chain(Kernel& kernel, const TargetDensity& target, const Vector& init,
                      std::size_t n_warmup, std::size_t n_samples, RngStream& rng);

struct ChainRunOptions {
  std::size_t n_chains = 1;
  std::size_t n_warmup = 1000;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  InitSpec init;
  std::size_t workers = 1;
};

/// Independent chains: chain c uses RngStream(seed, c) and its own kernel.
/// Results are identical for any worker count.
std::vector<ChainRecord> run_chains(const SamplerSpec& spec, const TargetDensity& target,
                                    const ChainRunOptions& options);

}  // namespace mcx
