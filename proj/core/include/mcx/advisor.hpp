#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mcx {

enum class SamplerChoice { gibbs, rwm, mala, hmc, nuts };

std::string to_string(SamplerChoice choice);
/// Throws InputError for unknown names.
SamplerChoice sampler_choice_from_string(const std::string& name);

/// Practitioner-supplied description of the problem. Every field must be set.
struct ProblemProfile {
  bool differentiable;
  bool fcds_tractable;
  std::size_t dim;
  bool high_correlation;
  bool needs_blackbox;
  bool suspect_multimodal;
  bool expensive_likelihood = false;
};

enum class Augmentation { mixture_proposal, surrogate_delayed_acceptance, ess_tuning };

std::string to_string(Augmentation a);

struct Recommendation {
  SamplerChoice primary_choice;
  bool multimodality_warning = false;
  std::string justification;
  std::vector<std::string> decision_path;
  std::vector<Augmentation> suggested_augmentations;
};

/// Dimension above which a problem counts as high-dimensional.
inline constexpr std::size_t kHighDimensionThreshold = 20;

/// Deterministic algorithm-selection tree:
///   not differentiable -> gibbs if the conditionals are tractable, else rwm;
///   differentiable     -> if dim > 20 or highly correlated, nuts for black-box
///                         use and hmc for expert tuning; otherwise rwm.
/// Suspected multimodality never changes the choice; it adds a warning and
/// the mixture-proposal augmentation.
Recommendation recommend(const ProblemProfile& profile);

struct CostDescriptor {
  SamplerChoice choice;
  std::string proposal;
  bool requires_gradient;
  std::string time;     // per iteration
  std::string space;    // per iteration
  std::string mixing;
  std::string instantiated_time;  // with d and L substituted where known
};

/// Per-iteration cost row for `choice`. `leapfrog_steps` is required for hmc
/// and nuts (InputError otherwise).
CostDescriptor predict_iteration_cost(SamplerChoice choice, std::size_t dim,
                                      std::optional<std::size_t> leapfrog_steps = std::nullopt);

std::string recommendation_to_json(const ProblemProfile& profile, const Recommendation& rec);

}  // namespace mcx
