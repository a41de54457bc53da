#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcx/advisor.hpp"
#include "mcx/error.hpp"
#include "mcx/experiment.hpp"
#include "mcx/selftest.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_samples;
  std::optional<std::size_t> n_warmup;
  std::optional<std::size_t> n_chains;
  std::optional<std::size_t> workers;
  std::optional<std::string> output;
  bool samples = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Override the seed");
    cmd->add_option("--n-samples", n_samples, "Override post-warmup steps per chain");
    cmd->add_option("--n-warmup", n_warmup, "Override warmup steps per chain");
    cmd->add_option("--n-chains", n_chains, "Override the number of chains");
    cmd->add_option("--workers", workers, "Threads used for chains");
    cmd->add_option("-o,--output", output, "Output directory");
  }

  void apply(mcx::ExperimentConfig& c) const {
    if (seed) c.seed = *seed;
    if (n_samples) c.n_samples = *n_samples;
    if (n_warmup) c.n_warmup = *n_warmup;
    if (n_chains) c.n_chains = *n_chains;
    if (workers) c.workers = *workers;
    if (output) c.output_dir = *output;
    if (samples) c.write_samples = true;
  }
};

void revalidate(const mcx::ExperimentConfig& c) {
  auto errors = mcx::validate_config(c);
  if (!errors.empty()) throw mcx::ValidationError(std::move(errors));
}

void print_report_summary(const mcx::DiagnosticsReport& r, std::ostream& out) {
  out << "sampler " << r.sampler << " on " << r.target << " (d=" << r.dim << ", " << r.n_chains
      << " chain(s) x " << r.n_samples << ")\n"
      << "  acceptance " << r.acceptance_rate << ", min ESS " << r.min_ess << ", ESS/step "
      << r.ess_per_step << ", divergences " << r.n_divergences << '\n'
      << "  evaluations: target " << r.counters.target << ", gradient " << r.counters.grad
      << ", surrogate " << r.counters.surrogate << '\n';
  if (r.rhat) out << "  max R-hat " << r.rhat->maxCoeff() << '\n';
  for (const auto& note : r.notes) out << "  note: " << note << '\n';
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw mcx::ValidationError({"--dims: '" + item + "' is not a positive integer"});
    }
  }
  if (dims.empty()) throw mcx::ValidationError({"--dims: at least one dimension required"});
  return dims;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcx: MCMC samplers, diagnostics and benchmark runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mcx::version());

  // run
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  std::string run_config;
  Overrides run_over;
  run->add_option("config", run_config, "Config file")->required()->check(CLI::ExistingFile);
  run_over.attach(run);
  run->add_flag("--samples", run_over.samples, "Also write samples.csv");

  // compare
  auto* compare = app.add_subcommand("compare", "Paired comparison of several configs or a named bundle");
  std::vector<std::string> compare_configs;
  std::string bundle;
  Overrides compare_over;
  compare->add_option("configs", compare_configs, "Config files sharing one target")->check(CLI::ExistingFile);
  compare->add_option("--bundle", bundle, "Named preset: gap1_multimodal, gap3_expensive, gap4_tuning");
  compare_over.attach(compare);

  // scale
  auto* scale = app.add_subcommand("scale", "Scaling study of the adapted step size over dimensions");
  std::string scale_config;
  std::string dims_text = "2,4,8,16,32,64";
  std::string reference;
  Overrides scale_over;
  scale->add_option("config", scale_config, "Base config file")->required()->check(CLI::ExistingFile);
  scale->add_option("--dims", dims_text, "Comma-separated ascending dimensions")->capture_default_str();
  scale->add_option("--reference", reference, "Reference sampler for the ratio column");
  scale_over.attach(scale);

  // advise
  auto* advise = app.add_subcommand("advise", "Recommend a sampler for a problem profile");
  mcx::ProblemProfile profile{false, false, 1, false, false, false, false};
  bool advise_json = false;
  advise->add_flag("--differentiable", profile.differentiable, "Log-density is differentiable");
  advise->add_flag("--fcds", profile.fcds_tractable, "Full conditionals can be sampled directly");
  advise->add_option("--dim", profile.dim, "Dimension")->required()->check(CLI::PositiveNumber);
  advise->add_flag("--correlated", profile.high_correlation, "Parameters are highly correlated");
  advise->add_flag("--blackbox", profile.needs_blackbox, "Automation preferred over expert tuning");
  advise->add_flag("--multimodal", profile.suspect_multimodal, "Multimodality is suspected");
  advise->add_flag("--expensive", profile.expensive_likelihood, "Likelihood evaluations are expensive");
  advise->add_flag("--json", advise_json, "Print JSON only");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*run) {
      mcx::ExperimentConfig c = mcx::load_config(run_config);
      run_over.apply(c);
      revalidate(c);
      const auto result = mcx::run_experiment(c);
      print_report_summary(result.report, std::cout);
      for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
    } else if (*compare) {
      if (bundle.empty() == compare_configs.empty()) {
        throw mcx::ValidationError({"compare: give either config files or --bundle, not both"});
      }
      std::vector<mcx::ExperimentConfig> configs;
      if (!bundle.empty()) {
        configs = mcx::comparison_bundle(bundle, compare_over.seed.value_or(20240601));
      } else {
        for (const auto& path : compare_configs) configs.push_back(mcx::load_config(path));
      }
      for (auto& c : configs) {
        compare_over.apply(c);
        revalidate(c);
      }
      const std::string out = compare_over.output.value_or(bundle.empty() ? "out" : "out/" + bundle);
      const auto rows = mcx::run_comparison(configs, out);
      std::cout << mcx::comparison_to_csv(rows) << "wrote " << out << "/comparison.csv\n";
    } else if (*scale) {
      mcx::ExperimentConfig c = mcx::load_config(scale_config);
      scale_over.apply(c);
      revalidate(c);
      std::optional<mcx::SamplerSpec> ref;
      if (!reference.empty()) ref = mcx::SamplerSpec{reference, {}, {}};
      const std::string out = scale_over.output.value_or(c.output_dir.string());
      const auto result = mcx::run_scaling_study(c, parse_dims(dims_text), ref, out);
      std::cout << mcx::scaling_to_csv(result) << "wrote " << out << "/scaling.csv\n";
    } else if (*advise) {
      const auto rec = mcx::recommend(profile);
      if (advise_json) {
        std::cout << mcx::recommendation_to_json(profile, rec) << '\n';
      } else {
        std::cout << "recommendation: " << mcx::to_string(rec.primary_choice) << '\n'
                  << rec.justification << '\n';
        if (rec.multimodality_warning) std::cout << "WARNING: multimodality suspected\n";
        for (const auto a : rec.suggested_augmentations) std::cout << "suggest: " << mcx::to_string(a) << '\n';
        const auto cost = mcx::predict_iteration_cost(
            rec.primary_choice, profile.dim,
            rec.primary_choice == mcx::SamplerChoice::hmc || rec.primary_choice == mcx::SamplerChoice::nuts
                ? std::optional<std::size_t>(10)
                : std::nullopt);
        std::cout << "cost per iteration: time " << cost.time << ", space " << cost.space << "; "
                  << cost.mixing << '\n'
                  << mcx::recommendation_to_json(profile, rec) << '\n';
      }
    } else if (*selftest) {
      bool ok = true;
      for (const auto& r : mcx::run_selftests()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : kExitRuntime;
    }
  } catch (const mcx::ValidationError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << '\n';
    return kExitValidation;
  } catch (const mcx::InputError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
