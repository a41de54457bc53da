#include "mcx/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#ifndef MCX_VERSION
#define MCX_VERSION "0.0.0"
#endif

namespace mcx {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return MCX_VERSION; }

namespace {

std::string init_mode_name(InitMode m) {
  switch (m) {
    case InitMode::overdispersed: return "overdispersed";
    case InitMode::zero: return "zero";
    case InitMode::explicit_point: return "explicit";
  }
  return "overdispersed";
}

std::string objective_name(TuningObjective o) {
  return o == TuningObjective::min_ess ? "min_ess" : "ess_per_grad_eval";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double mean_parameter(const std::vector<ChainRecord>& chains, const std::string& key) {
  if (key.empty() || chains.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : chains) {
    const auto it = c.kernel_parameters.find(key);
    if (it == c.kernel_parameters.end()) return 0.0;
    sum += it->second;
  }
  return sum / static_cast<double>(chains.size());
}

double warmup_last_quarter(const std::vector<ChainRecord>& chains) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : chains) {
    const auto& w = c.warmup_accept_prob;
    for (std::size_t i = w.size() - w.size() / 4; i < w.size(); ++i) {
      sum += w[i];
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// ---- parsing helpers --------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::vector<std::string>& errors) : errors_(errors) {}

  void count(const json& j, const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      errors_.push_back(std::string(key) + ": must be a non-negative integer");
      return;
    }
    out = v.get<std::size_t>();
  }

  void flag(const json& j, const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) {
      errors_.push_back(std::string(key) + ": must be true or false");
      return;
    }
    out = j.at(key).get<bool>();
  }

  void number(const json& j, const char* key, double& out, const std::string& where) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) {
      errors_.push_back(where + "." + key + ": must be a number");
      return;
    }
    out = j.at(key).get<double>();
  }

  void target(const json& j, TargetSpec& out) {
    if (!j.is_object()) {
      errors_.push_back("target: must be an object");
      return;
    }
    for (const auto& [k, v] : j.items()) {
      if (k == "name") {
        if (v.is_string()) out.name = v.get<std::string>();
        else errors_.push_back("target.name: must be a string");
      } else if (v.is_number()) {
        out.params[k] = v.get<double>();
      } else {
        errors_.push_back("target." + k + ": must be a number");
      }
    }
  }

  void sampler(const json& j, SamplerSpec& out) {
    if (!j.is_object()) {
      errors_.push_back("sampler: must be an object");
      return;
    }
    for (const auto& [k, v] : j.items()) {
      if (k == "name") {
        if (v.is_string()) out.name = v.get<std::string>();
        else errors_.push_back("sampler.name: must be a string");
      } else if (v.is_boolean()) {
        out.params[k] = v.get<bool>() ? 1.0 : 0.0;
      } else if (v.is_number()) {
        out.params[k] = v.get<double>();
      } else if (v.is_string()) {
        out.options[k] = v.get<std::string>();
      } else {
        errors_.push_back("sampler." + k + ": must be a number, boolean or string");
      }
    }
  }

  void init(const json& j, InitSpec& out) {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s == "overdispersed") out.mode = InitMode::overdispersed;
      else if (s == "zero") out.mode = InitMode::zero;
      else errors_.push_back("init: expected \"overdispersed\", \"zero\" or an array of numbers");
      return;
    }
    if (j.is_array()) {
      out.mode = InitMode::explicit_point;
      out.point.resize(static_cast<Eigen::Index>(j.size()));
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
          errors_.push_back("init[" + std::to_string(i) + "]: must be a number");
          return;
        }
        out.point(static_cast<Eigen::Index>(i)) = j[i].get<double>();
      }
      return;
    }
    errors_.push_back("init: expected \"overdispersed\", \"zero\" or an array of numbers");
  }

  void tune(const json& j, TuneSettings& out) {
    if (!j.is_object()) {
      errors_.push_back("tune: must be an object");
      return;
    }
    static const std::set<std::string> known{"enabled", "budget", "pilot_length", "lower", "upper",
                                             "objective"};
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) errors_.push_back("tune." + k + ": unknown field");
    out.enabled = true;
    flag(j, "enabled", out.enabled);
    count(j, "budget", out.budget);
    count(j, "pilot_length", out.pilot_length);
    number(j, "lower", out.lower, "tune");
    number(j, "upper", out.upper, "tune");
    if (j.contains("objective")) {
      const json& o = j.at("objective");
      if (o == "min_ess") out.objective = TuningObjective::min_ess;
      else if (o == "ess_per_grad_eval") out.objective = TuningObjective::ess_per_grad_eval;
      else errors_.push_back("tune.objective: expected \"min_ess\" or \"ess_per_grad_eval\"");
    }
  }

 private:
  std::vector<std::string>& errors_;
};

}  // namespace

// ---- config ----------------------------------------------------------------

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!j.is_object()) throw ValidationError({"config must be a JSON object"});

  std::vector<std::string> errors;
  static const std::set<std::string> known{"schema",  "label",     "target",        "sampler",
                                           "n_chains", "n_warmup", "n_samples",     "seed",
                                           "init",     "output_dir", "formats",     "write_samples",
                                           "rhat",     "workers",  "tune"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) errors.push_back(k + ": unknown field");

  ExperimentConfig c;
  Parser p(errors);
  if (j.contains("schema") && j["schema"] != kConfigSchema) {
    errors.push_back(std::string("schema: expected \"") + kConfigSchema + "\"");
  }
  if (j.contains("label")) {
    if (j["label"].is_string()) c.label = j["label"].get<std::string>();
    else errors.push_back("label: must be a string");
  }
  if (j.contains("target")) p.target(j["target"], c.target);
  if (j.contains("sampler")) p.sampler(j["sampler"], c.sampler);
  p.count(j, "n_chains", c.n_chains);
  p.count(j, "n_warmup", c.n_warmup);
  p.count(j, "n_samples", c.n_samples);
  p.count(j, "workers", c.workers);
  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned()) c.seed = j["seed"].get<std::uint64_t>();
    else errors.push_back("seed: must be a non-negative integer");
  }
  if (j.contains("init")) p.init(j["init"], c.init);
  if (j.contains("output_dir")) {
    if (j["output_dir"].is_string()) c.output_dir = j["output_dir"].get<std::string>();
    else errors.push_back("output_dir: must be a string");
  }
  if (j.contains("formats")) {
    c.formats.clear();
    if (!j["formats"].is_array()) {
      errors.push_back("formats: must be an array of strings");
    } else {
      for (const auto& f : j["formats"]) {
        if (f.is_string()) c.formats.push_back(f.get<std::string>());
        else errors.push_back("formats: entries must be strings");
      }
    }
  }
  p.flag(j, "write_samples", c.write_samples);
  p.flag(j, "rhat", c.rhat);
  if (j.contains("tune")) p.tune(j["tune"], c.tune);

  auto more = validate_config(c);
  errors.insert(errors.end(), more.begin(), more.end());
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot read config file '" + path.string() + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (c.n_samples < 1) errors.push_back("n_samples: must be >= 1");
  if (c.n_chains < 1) errors.push_back("n_chains: must be >= 1");
  if (c.workers < 1) errors.push_back("workers: must be >= 1");
  if (c.rhat && c.n_chains < 2) errors.push_back("rhat: requires n_chains >= 2");
  if (c.rhat && c.n_samples < 4) errors.push_back("rhat: requires n_samples >= 4");
  for (const auto& f : c.formats) {
    if (f != "json" && f != "csv") errors.push_back("formats: unknown format '" + f + "'");
  }

  std::optional<TargetDensity> target;
  if (c.target.name.empty()) {
    errors.push_back("target.name: required");
  } else {
    try {
      target = make_target(c.target);
    } catch (const Error& e) {
      errors.push_back(std::string("target: ") + e.what());
    }
  }

  const auto& names = kernel_names();
  if (c.sampler.name.empty()) {
    errors.push_back("sampler.name: required");
  } else if (std::find(names.begin(), names.end(), c.sampler.name) == names.end()) {
    errors.push_back("sampler.name: unknown sampler '" + c.sampler.name + "'");
  } else if (target) {
    try {
      (void)make_kernel(c.sampler, *target);
    } catch (const Error& e) {
      errors.push_back(std::string("sampler: ") + e.what());
    }
  }

  if (target && c.init.mode == InitMode::explicit_point &&
      static_cast<std::size_t>(c.init.point.size()) != target->dim()) {
    errors.push_back("init: explicit point has " + std::to_string(c.init.point.size()) +
                     " entries but the target has dimension " + std::to_string(target->dim()));
  }

  if (c.tune.enabled) {
    if (step_size_parameter(c.sampler.name).empty()) {
      errors.push_back("tune: sampler '" + c.sampler.name + "' has no step-size hyperparameter");
    }
    if (c.tune.budget < 2) errors.push_back("tune.budget: must be >= 2");
    if (c.tune.pilot_length < 10) errors.push_back("tune.pilot_length: must be >= 10");
    if (!(c.tune.lower > 0.0) || !std::isfinite(c.tune.upper) || !(c.tune.lower < c.tune.upper)) {
      errors.push_back("tune.lower/upper: need 0 < lower < upper < inf");
    }
  }
  return errors;
}

namespace {

json config_json(const ExperimentConfig& c) {
  json j;
  j["schema"] = kConfigSchema;
  j["label"] = c.label.empty() ? c.sampler.name : c.label;
  json t;
  t["name"] = c.target.name;
  for (const auto& [k, v] : c.target.params) t[k] = v;
  j["target"] = t;
  json s;
  s["name"] = c.sampler.name;
  for (const auto& [k, v] : c.sampler.params) s[k] = v;
  for (const auto& [k, v] : c.sampler.options) s[k] = v;
  j["sampler"] = s;
  j["n_chains"] = c.n_chains;
  j["n_warmup"] = c.n_warmup;
  j["n_samples"] = c.n_samples;
  j["seed"] = c.seed;
  if (c.init.mode == InitMode::explicit_point) {
    json pt = json::array();
    for (Eigen::Index i = 0; i < c.init.point.size(); ++i) pt.push_back(c.init.point(i));
    j["init"] = pt;
  } else {
    j["init"] = init_mode_name(c.init.mode);
  }
  j["output_dir"] = c.output_dir.string();
  j["formats"] = c.formats;
  j["write_samples"] = c.write_samples;
  j["rhat"] = c.rhat;
  j["workers"] = c.workers;
  if (c.tune.enabled) {
    j["tune"] = json{{"enabled", true},
                     {"budget", c.tune.budget},
                     {"pilot_length", c.tune.pilot_length},
                     {"lower", c.tune.lower},
                     {"upper", c.tune.upper},
                     {"objective", objective_name(c.tune.objective)}};
  }
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

// ---- single runs -------------------------------------------------------------

ExperimentResult execute_experiment(const ExperimentConfig& config) {
  auto errors = validate_config(config);
  if (!errors.empty()) throw ValidationError(std::move(errors));

  ExperimentResult result;
  result.config = config;
  const TargetDensity target = make_target(config.target);

  if (config.tune.enabled) {
    const std::string param = step_size_parameter(config.sampler.name);
    TuningJob job;
    job.sampler = config.sampler.name;
    job.box = {TuningParameter{param, config.tune.lower, config.tune.upper, true}};
    job.fixed = config.sampler.params;
    job.budget = config.tune.budget;
    job.pilot_length = config.tune.pilot_length;
    job.objective = config.tune.objective;
    RngStream tune_rng(config.seed, 0xffffffffULL);
    result.tuning = tune_by_ess(job, target, tune_rng);
    result.config.sampler.params[param] = result.tuning->best.at(param);
  }

  ChainRunOptions options;
  options.n_chains = config.n_chains;
  options.n_warmup = config.n_warmup;
  options.n_samples = config.n_samples;
  options.seed = config.seed;
  options.init = config.init;
  options.workers = config.workers;
  result.chains = run_chains(result.config.sampler, target, options);

  result.report = build_report(result.chains, target, config.sampler.name);
  auto& extras = result.report.extras;
  for (const auto& chain : result.chains) {
    for (const auto& [k, v] : chain.kernel_parameters) extras["param." + k] += v / static_cast<double>(result.chains.size());
    for (const auto& [k, v] : chain.kernel_stats) extras["stat." + k] += v / static_cast<double>(result.chains.size());
  }
  if (config.n_warmup > 0) extras["warmup_accept_last_quarter"] = warmup_last_quarter(result.chains);
  if (result.tuning) {
    extras["tuning.objective"] = result.tuning->best_record.objective;
    extras["tuning.pilot_accept"] = result.tuning->best_record.accept_rate;
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result = execute_experiment(config);
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);

  auto has_format = [&](const char* f) {
    return std::find(config.formats.begin(), config.formats.end(), f) != config.formats.end();
  };
  if (has_format("json")) {
    write_file(dir / "diagnostics.json", report_to_json(result.report));
    result.files.push_back(dir / "diagnostics.json");
  }
  if (has_format("csv")) {
    write_file(dir / "diagnostics.csv", report_to_csv(result.report));
    result.files.push_back(dir / "diagnostics.csv");
  }
  if (config.write_samples) {
    std::ostringstream out;
    out.precision(17);
    out << "chain,iteration";
    for (std::size_t j = 0; j < result.report.dim; ++j) out << ",x" << j;
    out << ",accepted\n";
    for (std::size_t c = 0; c < result.chains.size(); ++c) {
      const auto& ch = result.chains[c];
      for (Eigen::Index i = 0; i < ch.samples.rows(); ++i) {
        out << c << ',' << i;
        for (Eigen::Index j = 0; j < ch.samples.cols(); ++j) out << ',' << ch.samples(i, j);
        out << ',' << static_cast<int>(ch.accept_flags[static_cast<std::size_t>(i)]) << '\n';
      }
    }
    write_file(dir / "samples.csv", out.str());
    result.files.push_back(dir / "samples.csv");
  }
  if (result.tuning) {
    TuningJob job;
    job.box = {TuningParameter{step_size_parameter(config.sampler.name), config.tune.lower,
                               config.tune.upper, true}};
    std::ostringstream out;
    write_tuning_trace_csv(out, job, *result.tuning);
    write_file(dir / "tuning_trace.csv", out.str());
    result.files.push_back(dir / "tuning_trace.csv");
  }

  json manifest;
  manifest["schema"] = kManifestSchema;
  manifest["version"] = version();
  manifest["timestamp"] = utc_timestamp();
  manifest["seed"] = config.seed;
  manifest["config"] = config_json(result.config);
  json chains = json::array();
  for (const auto& ch : result.chains) {
    json cj;
    cj["kernel_parameters"] = ch.kernel_parameters;
    cj["kernel_hash"] = ch.kernel_hash;
    cj["counters"] = json{{"target", ch.counters.target}, {"grad", ch.counters.grad}, {"surrogate", ch.counters.surrogate}};
    chains.push_back(cj);
  }
  manifest["chains"] = chains;
  json files = json::array();
  for (const auto& f : result.files) files.push_back(f.filename().string());
  manifest["files"] = files;
  write_file(dir / "run-manifest.json", manifest.dump(2) + "\n");
  result.files.push_back(dir / "run-manifest.json");
  return result;
}

// ---- comparisons -------------------------------------------------------------

std::vector<ComparisonRow> compare_experiments(const std::vector<ExperimentConfig>& configs) {
  if (configs.empty()) throw InputError("comparison needs at least one config");
  for (const auto& c : configs) {
    if (c.target.name != configs.front().target.name || c.target.params != configs.front().target.params) {
      throw InputError("comparison configs must share the target");
    }
    if (c.n_samples != configs.front().n_samples) {
      throw InputError("comparison configs must share n_samples");
    }
  }
  std::vector<ComparisonRow> rows;
  for (const auto& config : configs) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult r = execute_experiment(config);
    ComparisonRow row;
    row.label = config.label.empty() ? config.sampler.name : config.label;
    row.sampler = config.sampler.name;
    row.step_size = mean_parameter(r.chains, step_size_parameter(config.sampler.name));
    row.warmup_accept_last_quarter = warmup_last_quarter(r.chains);
    if (config.target.name == "bimodal_mixture") {
      double positive = 0.0;
      std::uint64_t jumps = 0;
      std::size_t total = 0;
      for (const auto& ch : r.chains) {
        for (Eigen::Index i = 0; i < ch.samples.rows(); ++i) {
          positive += ch.samples(i, 0) > 0.0 ? 1.0 : 0.0;
          if (i > 0 && (ch.samples(i, 0) > 0.0) != (ch.samples(i - 1, 0) > 0.0)) ++jumps;
        }
        total += static_cast<std::size_t>(ch.samples.rows());
      }
      row.occupancy_positive = positive / static_cast<double>(total);
      row.mode_jumps = jumps;
    }
    if (r.report.mean_error) row.max_abs_mean_error = r.report.mean_error->cwiseAbs().maxCoeff();
    row.report = std::move(r.report);
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "label,sampler,target,dim,n_chains,n_samples,min_ess,ess_per_step,ess_per_true_eval,"
         "ess_per_grad_eval,acceptance,warmup_accept_last_quarter,esjd,divergences,target_evals,"
         "grad_evals,surrogate_evals,sampling_target_evals,sampling_grad_evals,step_size,"
         "occupancy_positive,mode_jumps,max_abs_mean_error,wall_time\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << row.label << ',' << row.sampler << ',' << r.target << ',' << r.dim << ',' << r.n_chains << ','
        << r.n_samples << ',' << r.min_ess << ',' << r.ess_per_step << ',' << r.ess_per_true_eval << ','
        << r.ess_per_grad_eval << ',' << r.acceptance_rate << ',' << row.warmup_accept_last_quarter << ','
        << r.esjd << ',' << r.n_divergences << ',' << r.counters.target << ',' << r.counters.grad << ','
        << r.counters.surrogate << ',' << r.sampling_counters.target << ',' << r.sampling_counters.grad
        << ',' << row.step_size << ',';
    if (row.occupancy_positive) out << *row.occupancy_positive;
    out << ',';
    if (row.mode_jumps) out << *row.mode_jumps;
    out << ',' << row.max_abs_mean_error << ',' << row.wall_time << '\n';
  }
  return out.str();
}

std::vector<ComparisonRow> run_comparison(const std::vector<ExperimentConfig>& configs,
                                          const fs::path& out_dir) {
  auto rows = compare_experiments(configs);
  fs::create_directories(out_dir);
  write_file(out_dir / "comparison.csv", comparison_to_csv(rows));
  return rows;
}

const std::vector<std::string>& bundle_names() {
  static const std::vector<std::string> names{"gap1_multimodal", "gap3_expensive", "gap4_tuning"};
  return names;
}

std::vector<ExperimentConfig> comparison_bundle(const std::string& name, std::uint64_t seed) {
  std::vector<ExperimentConfig> out;
  auto base = [&](TargetSpec target, std::string sampler) {
    ExperimentConfig c;
    c.target = std::move(target);
    c.sampler.name = std::move(sampler);
    c.label = c.sampler.name;
    c.seed = seed;
    return c;
  };

  if (name == "gap1_multimodal") {
    const TargetSpec target{"bimodal_mixture", {{"dim", 50}, {"separation", 8}, {"weight", 0.5}}};
    InitSpec one_mode{InitMode::explicit_point, Vector::Zero(50)};
    one_mode.point(0) = -4.0;
    for (const char* s : {"rwm", "nuts", "gmm_independence"}) {
      ExperimentConfig c = base(target, s);
      c.init = one_mode;
      c.n_warmup = 2000;
      c.n_samples = 20000;
      if (c.sampler.name == "gmm_independence") {
        c.sampler.params = {{"components", 2}, {"pilot_chains", 8}, {"pilot_length", 5000}};
        c.n_warmup = 0;
      }
      out.push_back(std::move(c));
    }
  } else if (name == "gap3_expensive") {
    const TargetSpec target{"standard_gaussian", {{"dim", 2}, {"delay_us", 20}}};
    for (const char* s : {"rwm", "da_rwm"}) {
      ExperimentConfig c = base(target, s);
      c.n_warmup = 2000;
      c.n_samples = 20000;
      if (c.sampler.name == "da_rwm") c.sampler.params = {{"training_budget", 200}};
      out.push_back(std::move(c));
    }
  } else if (name == "gap4_tuning") {
    const TargetSpec target{"standard_gaussian", {{"dim", 10}}};
    for (const char* s : {"hmc", "nuts", "rwm"}) {
      ExperimentConfig c = base(target, s);
      c.n_warmup = 2000;
      c.n_samples = 5000;
      if (c.sampler.name == "rwm") {
        c.label = "rwm_ess_tuned";
        c.n_warmup = 1000;
        c.tune = TuneSettings{true, 16, 20000, 0.05, 5.0, TuningObjective::min_ess};
      }
      out.push_back(std::move(c));
    }
  } else {
    throw InputError("unknown comparison bundle '" + name + "'");
  }
  return out;
}

// ---- scaling -----------------------------------------------------------------

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("log_log_slope: need >= 2 paired points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("log_log_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InputError("log_log_slope: x values must not all coincide");
  return sxy / sxx;
}

ScalingResult scaling_study(const ExperimentConfig& base, const std::vector<std::size_t>& dims,
                            const std::optional<SamplerSpec>& reference) {
  if (dims.empty()) throw InputError("scaling study needs at least one dimension");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 1) throw InputError("scaling study dimensions must be >= 1");
    if (i > 0 && dims[i] <= dims[i - 1]) throw InputError("scaling study dimensions must be strictly ascending");
  }
  ScalingResult result;
  result.sampler = base.sampler.name;
  if (reference) result.reference = reference->name;
  const std::string param = step_size_parameter(base.sampler.name);

  for (std::size_t d : dims) {
    ExperimentConfig c = base;
    c.target.params["dim"] = static_cast<double>(d);
    if (c.init.mode == InitMode::explicit_point) c.init.mode = InitMode::overdispersed;
    ExperimentResult r = execute_experiment(c);
    ScalingRow row;
    row.dim = d;
    row.step_size = mean_parameter(r.chains, param);
    row.acceptance = r.report.acceptance_rate;
    row.min_ess = r.report.min_ess;
    row.ess_per_step = r.report.ess_per_step;
    row.grad_evals = r.report.counters.grad;
    if (reference) {
      ExperimentConfig rc = c;
      rc.sampler = *reference;
      rc.tune.enabled = false;
      const ExperimentResult rr = execute_experiment(rc);
      row.reference_ess_per_step = rr.report.ess_per_step;
      if (rr.report.ess_per_step > 0.0) row.ratio = row.ess_per_step / rr.report.ess_per_step;
    }
    result.rows.push_back(row);
  }
  if (result.rows.size() >= 3 && !param.empty()) {
    std::vector<double> x, y;
    for (const auto& row : result.rows) {
      x.push_back(static_cast<double>(row.dim));
      y.push_back(row.step_size);
    }
    result.slope = log_log_slope(x, y);
  }
  return result;
}

std::string scaling_to_csv(const ScalingResult& result) {
  std::ostringstream out;
  out.precision(10);
  out << "d,step_size,acceptance,min_ess,ess_per_step,grad_evals,reference_ess_per_step,ratio\n";
  for (const auto& row : result.rows) {
    out << row.dim << ',' << row.step_size << ',' << row.acceptance << ',' << row.min_ess << ','
        << row.ess_per_step << ',' << row.grad_evals << ',';
    if (row.reference_ess_per_step) out << *row.reference_ess_per_step;
    out << ',';
    if (row.ratio) out << *row.ratio;
    out << '\n';
  }
  if (result.slope) out << "slope," << *result.slope << ",,,,,,\n";
  return out.str();
}

ScalingResult run_scaling_study(const ExperimentConfig& base, const std::vector<std::size_t>& dims,
                                const std::optional<SamplerSpec>& reference, const fs::path& out_dir) {
  ScalingResult result = scaling_study(base, dims, reference);
  fs::create_directories(out_dir);
  write_file(out_dir / "scaling.csv", scaling_to_csv(result));
  return result;
}

}  // namespace mcx
