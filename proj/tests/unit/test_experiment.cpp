#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mcx/experiment.hpp"
#include "json.hpp"

using namespace mcx;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ValidationError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mcx_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(const std::string& sampler, std::size_t dim = 2) {
  ExperimentConfig c;
  c.target = {"standard_gaussian", {{"dim", static_cast<double>(dim)}}};
  c.sampler = {sampler, {}, {}};
  c.n_warmup = 200;
  c.n_samples = 400;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("a minimal config parses with defaults") {
    const auto c = parse_config(R"({"target": {"name": "funnel", "dim": 4}, "sampler": {"name": "nuts", "max_tree_depth": 8}})");
    CHECK(c.target.name == "funnel");
    CHECK(c.target.params.at("dim") == 4);
    CHECK(c.sampler.params.at("max_tree_depth") == 8);
    CHECK(c.n_chains == 1);
    CHECK(c.init.mode == InitMode::overdispersed);
  }

  TEST_CASE("every violation is listed") {
    const auto v = violations_of(R"({"target": {"name": "standard_gaussian", "dims": 2},
      "sampler": {"name": "nuts"}, "n_samples": 0, "rhat": true, "bogus": 1})");
    CHECK(mentions(v, "bogus"));
    CHECK(mentions(v, "n_samples"));
    CHECK(mentions(v, "rhat"));
    CHECK(mentions(v, "dims"));
    CHECK(v.size() >= 4);
  }

  TEST_CASE("field type and value errors") {
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}})"), "sampler.name"));
    CHECK(mentions(violations_of(R"({"sampler": {"name": "rwm"}})"), "target.name"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "slice"}})"), "unknown sampler"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "rwm"}, "seed": -1})"), "seed"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "rwm"}, "init": [1]})"), "init"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "rwm"}, "formats": ["xml"]})"), "xml"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "gibbs"}})"), "sampler"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "gibbs"}, "tune": {}})"), "tune"));
    CHECK(mentions(violations_of(R"({"target": {"name": "banana"}, "sampler": {"name": "rwm"}, "tune": {"budget": 1}})"), "tune.budget"));
    CHECK(mentions(violations_of("not json"), "JSON"));
    CHECK(mentions(violations_of(R"({"schema": "other/2", "target": {"name": "banana"}, "sampler": {"name": "rwm"}})"), "schema"));
  }

  TEST_CASE("config round-trips through its JSON form") {
    auto c = small("hmc", 3);
    c.sampler.params["n_leapfrog"] = 12;
    c.init = {InitMode::explicit_point, (Vector(3) << 1, 2, 3).finished()};
    c.tune.enabled = true;
    const auto back = parse_config(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
  }

  TEST_CASE("runs are reproducible and write their artifacts") {
    auto c = small("nuts");
    c.n_chains = 2;
    c.rhat = true;
    c.write_samples = true;
    c.output_dir = scratch_dir("run_a");
    const auto a = run_experiment(c);
    c.output_dir = scratch_dir("run_b");
    const auto b = run_experiment(c);
    for (const char* f : {"diagnostics.json", "diagnostics.csv", "samples.csv", "run-manifest.json"}) {
      INFO(f);
      CHECK(fs::exists(scratch_dir("x").parent_path() / "mcx_test_run_a" / f));
    }
    CHECK(slurp(fs::temp_directory_path() / "mcx_test_run_a/diagnostics.json") ==
          slurp(fs::temp_directory_path() / "mcx_test_run_b/diagnostics.json"));
    CHECK(slurp(fs::temp_directory_path() / "mcx_test_run_a/samples.csv") ==
          slurp(fs::temp_directory_path() / "mcx_test_run_b/samples.csv"));
    CHECK(a.report.rhat.has_value());
    const auto manifest = nlohmann::json::parse(slurp(fs::temp_directory_path() / "mcx_test_run_a/run-manifest.json"));
    CHECK(manifest["schema"] == kManifestSchema);
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["config"]["sampler"]["name"] == "nuts");
    CHECK(b.report.min_ess == a.report.min_ess);
  }

  TEST_CASE("a tuned run records its trace and fixes the tuned value") {
    auto c = small("rwm");
    c.tune.enabled = true;
    c.tune.budget = 4;
    c.tune.pilot_length = 500;
    c.output_dir = scratch_dir("tuned");
    const auto r = run_experiment(c);
    REQUIRE(r.tuning.has_value());
    CHECK(r.config.sampler.params.at("sigma") == r.tuning->best.at("sigma"));
    CHECK(r.report.extras.at("param.sigma") == r.tuning->best.at("sigma"));
    CHECK(fs::exists(c.output_dir / "tuning_trace.csv"));
  }

  TEST_CASE("comparison of one config has one row") {
    const auto rows = compare_experiments({small("rwm")});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].label == "rwm");
    const std::string csv = comparison_to_csv(rows);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.rfind("label,sampler,target,dim,", 0) == 0);
  }

  TEST_CASE("comparisons require a shared target") {
    auto a = small("rwm"), b = small("mala", 3);
    CHECK_THROWS_AS(compare_experiments({a, b}), InputError);
    b = small("mala");
    b.n_samples = 10;
    CHECK_THROWS_AS(compare_experiments({a, b}), InputError);
  }

  TEST_CASE("comparison rows report mode statistics only for bimodal targets") {
    auto a = small("rwm");
    a.target = {"bimodal_mixture", {{"dim", 2}, {"separation", 2}}};
    auto b = a;
    b.sampler.name = "mala";
    const auto rows = compare_experiments({a, b});
    CHECK(rows[0].occupancy_positive.has_value());
    CHECK(rows[1].mode_jumps.has_value());
    CHECK_FALSE(compare_experiments({small("rwm")})[0].occupancy_positive.has_value());
  }

  TEST_CASE("named bundles") {
    CHECK(bundle_names().size() == 3);
    for (const auto& name : bundle_names()) {
      const auto configs = comparison_bundle(name, 1);
      CHECK(configs.size() >= 2);
      for (const auto& c : configs) CHECK(validate_config(c).empty());
    }
    CHECK_THROWS_AS(comparison_bundle("gap9", 1), InputError);
    CHECK(comparison_bundle("gap1_multimodal", 1)[0].target.params.at("dim") == 50);
  }

  TEST_CASE("scaling study rows, ratio column and slope") {
    ExperimentConfig base = small("rwm");
    base.n_samples = 2000;
    base.n_warmup = 1000;
    const auto r = scaling_study(base, {2, 4, 8}, SamplerSpec{"mala", {}, {}});
    REQUIRE(r.rows.size() == 3);
    CHECK(r.slope.has_value());
    CHECK(*r.slope < 0);
    for (const auto& row : r.rows) {
      CHECK(row.ratio.has_value());
      CHECK(*row.ratio == doctest::Approx(row.ess_per_step / *row.reference_ess_per_step));
    }
    const auto two = scaling_study(base, {2, 4});
    CHECK_FALSE(two.slope.has_value());
    CHECK_FALSE(two.rows[0].ratio.has_value());
    const std::string csv = scaling_to_csv(r);
    CHECK(csv.rfind("d,step_size,acceptance,min_ess,ess_per_step,grad_evals,reference_ess_per_step,ratio\n", 0) == 0);
    CHECK(csv.find("slope,") != std::string::npos);
    CHECK_THROWS_AS(scaling_study(base, {4, 2}), InputError);
    CHECK_THROWS_AS(scaling_study(base, {0, 2}), InputError);
  }

  TEST_CASE("log-log slope") {
    CHECK(log_log_slope({1, 2, 4, 8}, {1, 0.5, 0.25, 0.125}) == doctest::Approx(-1.0));
    CHECK(log_log_slope({2, 8, 32}, {3, 6, 12}) == doctest::Approx(0.5));
  }
}
