#include "mcx/advisor.hpp"

#include "json.hpp"
#include "mcx/error.hpp"

namespace mcx {

std::string to_string(SamplerChoice choice) {
  switch (choice) {
    case SamplerChoice::gibbs: return "gibbs";
    case SamplerChoice::rwm: return "rwm";
    case SamplerChoice::mala: return "mala";
    case SamplerChoice::hmc: return "hmc";
    case SamplerChoice::nuts: return "nuts";
  }
  return "unknown";
}

SamplerChoice sampler_choice_from_string(const std::string& name) {
  if (name == "gibbs") return SamplerChoice::gibbs;
  if (name == "rwm") return SamplerChoice::rwm;
  if (name == "mala") return SamplerChoice::mala;
  if (name == "hmc") return SamplerChoice::hmc;
  if (name == "nuts") return SamplerChoice::nuts;
  throw InputError("unknown sampler choice '" + name + "'");
}

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::mixture_proposal: return "gmm_independence";
    case Augmentation::surrogate_delayed_acceptance: return "da_rwm";
    case Augmentation::ess_tuning: return "ess_tuning";
  }
  return "unknown";
}

Recommendation recommend(const ProblemProfile& profile) {
  Recommendation rec;
  auto& path = rec.decision_path;
  std::string why;

  if (!profile.differentiable) {
    path.emplace_back("target not differentiable: gradient-based samplers unavailable");
    if (profile.fcds_tractable) {
      path.emplace_back("full conditionals tractable");
      rec.primary_choice = SamplerChoice::gibbs;
      why = "Gibbs sampling: exact conditional draws, acceptance rate 1.";
    } else {
      path.emplace_back("full conditionals intractable");
      rec.primary_choice = SamplerChoice::rwm;
      why = "Random-walk Metropolis as the gradient-free fallback (slice sampling is the "
            "usual alternative); expect slow mixing if d is large or parameters are correlated.";
    }
  } else {
    path.emplace_back("target differentiable: gradient-based samplers available");
    const bool high_dim = profile.dim > kHighDimensionThreshold;
    if (high_dim || profile.high_correlation) {
      path.emplace_back(high_dim ? "high-dimensional (d > 20)" : "highly correlated parameters");
      if (profile.needs_blackbox) {
        path.emplace_back("black-box automation required");
        rec.primary_choice = SamplerChoice::nuts;
        why = "NUTS: gradients are required here and trajectory length is tuned automatically.";
      } else {
        path.emplace_back("expert tuning of a fixed model");
        rec.primary_choice = SamplerChoice::hmc;
        why = "HMC with hand-tuned step size and trajectory length; avoids tree-building "
              "overhead for maximum ESS per second.";
      }
    } else {
      path.emplace_back("low-dimensional (d <= 20) and weakly correlated");
      rec.primary_choice = SamplerChoice::rwm;
      why = "Random-walk Metropolis is likely sufficient; the gradient cost C_g may not be "
            "worth the statistical gain on a simple problem.";
    }
  }

  if (profile.suspect_multimodal) {
    rec.multimodality_warning = true;
    path.emplace_back("suspected multimodality: WARNING");
    why += " WARNING: every sampler in this tree is local and will likely stay trapped in "
           "the first mode it finds; pair it with a global mixture independence proposal.";
    rec.suggested_augmentations.push_back(Augmentation::mixture_proposal);
  }
  if (profile.expensive_likelihood) {
    path.emplace_back("expensive likelihood");
    why += " Screen proposals with a surrogate (delayed acceptance) to save true evaluations.";
    rec.suggested_augmentations.push_back(Augmentation::surrogate_delayed_acceptance);
  }
  rec.suggested_augmentations.push_back(Augmentation::ess_tuning);
  rec.justification = why;
  return rec;
}

CostDescriptor predict_iteration_cost(SamplerChoice choice, std::size_t dim,
                                      std::optional<std::size_t> leapfrog_steps) {
  const std::string d = std::to_string(dim);
  switch (choice) {
    case SamplerChoice::rwm:
      return {choice, "q' ~ N(q, sigma^2 I)", false, "O(C_f)", "O(d)", "Poor. O(d^2) or worse.",
              "O(C_f)"};
    case SamplerChoice::gibbs:
      return {choice, "q_i ~ pi(q_i | q_-i)", false, "O(∑ C_FCD_i)", "O(d)",
              "Varies. Can be O(1) or O(d^2) depending on correlation.",
              "O(∑_{i=1}^{" + d + "} C_FCD_i)"};
    case SamplerChoice::mala:
      return {choice, "Discretized Langevin step", true, "O(C_g)", "O(d)", "Good. Better than RWM.",
              "O(C_g)"};
    case SamplerChoice::hmc:
      if (!leapfrog_steps) throw InputError("predict_iteration_cost: hmc needs L");
      return {choice, "Symplectic integrator (fixed L)", true, "O(L · C_g)", "O(d)",
              "Excellent. O(d) to O(d^{1/4}).",
              "O(" + std::to_string(*leapfrog_steps) + " · C_g)"};
    case SamplerChoice::nuts:
      if (!leapfrog_steps) throw InputError("predict_iteration_cost: nuts needs L'");
      return {choice, "Symplectic integrator (dynamic L')", true, "O(L′ · C_g)",
              "O(L′ · d)", "Excellent. O(d) to O(d^{1/4}).",
              "O(" + std::to_string(*leapfrog_steps) + " · C_g)"};
  }
  throw InputError("predict_iteration_cost: unknown sampler");
}

std::string recommendation_to_json(const ProblemProfile& profile, const Recommendation& rec) {
  nlohmann::ordered_json j;
  j["profile"] = {{"differentiable", profile.differentiable},
                  {"fcds_tractable", profile.fcds_tractable},
                  {"dim", profile.dim},
                  {"high_correlation", profile.high_correlation},
                  {"needs_blackbox", profile.needs_blackbox},
                  {"suspect_multimodal", profile.suspect_multimodal},
                  {"expensive_likelihood", profile.expensive_likelihood}};
  j["primary_choice"] = to_string(rec.primary_choice);
  j["multimodality_warning"] = rec.multimodality_warning;
  j["justification"] = rec.justification;
  j["decision_path"] = rec.decision_path;
  auto aug = nlohmann::ordered_json::array();
  for (auto a : rec.suggested_augmentations) aug.push_back(to_string(a));
  j["suggested_augmentations"] = aug;
  return j.dump(2) + "\n";
}

}  // namespace mcx
