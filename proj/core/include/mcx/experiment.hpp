#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mcx/adaptation.hpp"
#include "mcx/diagnostics.hpp"
#include "mcx/kernels.hpp"
#include "mcx/targets.hpp"

namespace mcx {

/// Library version string, also written into run manifests.
std::string version();

inline constexpr const char* kConfigSchema = "mcx.config/1";
inline constexpr const char* kManifestSchema = "mcx.manifest/1";

/// Optional ESS-driven search for the sampler's step-size hyperparameter
/// before the main run.
struct TuneSettings {
  bool enabled = false;
  std::size_t budget = 16;
  std::size_t pilot_length = 5000;
  double lower = 0.01;
  double upper = 5.0;
  TuningObjective objective = TuningObjective::min_ess;
};

struct ExperimentConfig {
  std::string label;                  // row name in comparisons; defaults to the sampler name
  TargetSpec target;
  SamplerSpec sampler;
  std::size_t n_chains = 1;
  std::size_t n_warmup = 1000;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  InitSpec init;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> formats{"json", "csv"};
  bool write_samples = false;
  bool rhat = false;                  // require R-hat (needs n_chains >= 2)
  std::size_t workers = 1;
  TuneSettings tune;
};

/// Parses a JSON config document. Throws ValidationError listing every
/// violated field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every constraint the config violates; empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

/// Fully resolved config as JSON (the form stored in the manifest).
std::string config_to_json(const ExperimentConfig& config);

struct ExperimentResult {
  ExperimentConfig config;            // after tuning, with the tuned value fixed
  DiagnosticsReport report;
  std::vector<ChainRecord> chains;
  std::optional<TuningResult> tuning;
  std::vector<std::filesystem::path> files;
};

/// Runs the chains and builds the report without touching the filesystem.
ExperimentResult execute_experiment(const ExperimentConfig& config);

/// execute_experiment, then writes diagnostics.json / diagnostics.csv (per
/// `formats`), run-manifest.json, and optionally samples.csv and
/// tuning_trace.csv into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

// ---- comparisons -----------------------------------------------------------

struct ComparisonRow {
  std::string label;
  std::string sampler;
  DiagnosticsReport report;
  double step_size = 0.0;                     // mean over chains, 0 when not applicable
  double warmup_accept_last_quarter = 0.0;
  std::optional<double> occupancy_positive;   // bimodal targets: fraction with x_0 > 0
  std::optional<std::uint64_t> mode_jumps;    // sign changes of x_0, summed over chains
  double max_abs_mean_error = 0.0;            // 0 when the target has no analytic mean
  double wall_time = 0.0;
};

/// One row per config. All configs must share target and n_samples.
std::vector<ComparisonRow> compare_experiments(const std::vector<ExperimentConfig>& configs);
std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

/// compare_experiments, then writes comparison.csv into `out_dir`.
std::vector<ComparisonRow> run_comparison(const std::vector<ExperimentConfig>& configs,
                                          const std::filesystem::path& out_dir);

/// Named presets: gap1_multimodal, gap3_expensive, gap4_tuning.
std::vector<ExperimentConfig> comparison_bundle(const std::string& name, std::uint64_t seed);
const std::vector<std::string>& bundle_names();

// ---- scaling ---------------------------------------------------------------

struct ScalingRow {
  std::size_t dim = 0;
  double step_size = 0.0;
  double acceptance = 0.0;
  double min_ess = 0.0;
  double ess_per_step = 0.0;
  std::uint64_t grad_evals = 0;
  std::optional<double> reference_ess_per_step;
  std::optional<double> ratio;        // ess_per_step / reference_ess_per_step
};

struct ScalingResult {
  std::string sampler;
  std::optional<std::string> reference;
  std::vector<ScalingRow> rows;
  std::optional<double> slope;        // log-log slope of step size against d (>= 3 dims)
};

/// The base config is rerun with the target's "dim" parameter set to each
/// entry of `dims` (ascending, each >= 1). A reference sampler, when given,
/// is run on the same targets to produce the ratio column.
ScalingResult scaling_study(const ExperimentConfig& base, const std::vector<std::size_t>& dims,
                            const std::optional<SamplerSpec>& reference = std::nullopt);
std::string scaling_to_csv(const ScalingResult& result);

/// scaling_study, then writes scaling.csv into `out_dir`.
ScalingResult run_scaling_study(const ExperimentConfig& base, const std::vector<std::size_t>& dims,
                                const std::optional<SamplerSpec>& reference,
                                const std::filesystem::path& out_dir);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mcx
