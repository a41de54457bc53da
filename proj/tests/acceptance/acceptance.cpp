// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mcx/advisor.hpp"
#include "mcx/classic.hpp"
#include "mcx/core.hpp"
#include "mcx/design.hpp"
#include "mcx/diagnostics.hpp"
#include "mcx/experiment.hpp"
#include "mcx/gradient.hpp"
#include "mcx/kernels.hpp"
#include "mcx/targets.hpp"

using namespace mcx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "[fail: " << what << "] ";
    }
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// ---- 1 ------------------------------------------------------------------------
void exact_stationarity(Outcome& o) {
  double dev = 0, db = 0;
  auto check = [&](const Vector& pi, const Matrix& g) {
    const auto r = discrete_stationarity_oracle(pi, g);
    dev = std::max(dev, r.max_deviation);
    db = std::max(db, r.max_detailed_balance_violation);
  };
  check(fixtures::vec({0.5, 0.5}), (Matrix(2, 2) << 0, 1, 1, 0).finished());
  check(fixtures::vec({0.9, 0.1}), Matrix::Constant(2, 2, 0.5));
  check(fixtures::vec({0.2, 0.3, 0.5}), (Matrix(3, 3) << 0, 0.5, 0.5, 0.5, 0, 0.5, 0.5, 0.5, 0).finished());
  RngStream rng(101, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector pi(8);
    Matrix g(8, 8);
    for (int i = 0; i < 8; ++i) pi(i) = 0.05 + rng.uniform();
    pi /= pi.sum();
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) g(i, j) = rng.uniform();
      g.row(i) /= g.row(i).sum();
    }
    check(pi, g);
  }
  o.require(dev < 1e-12, "stationarity");
  o.require(db < 1e-12, "detailed balance");
  o.detail << "max |piP-pi|=" << fmt(dev) << " max db=" << fmt(db);
}

// ---- 2 ------------------------------------------------------------------------
void leapfrog_geometry(Outcome& o) {
  const std::vector<TargetDensity> ts{make_standard_gaussian(5), make_ar1_gaussian(5, 0.9), make_funnel(5),
                                      make_banana(), make_bimodal_mixture(4, 8, 0.5)};
  RngStream rng(102, 0);
  double worst = 0;
  for (const auto& t : ts) {
    const auto d = static_cast<Eigen::Index>(t.dim());
    for (int k = 0; k < 1000; ++k) {
      Vector q(d), p(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double lo = t.box_lower()(i), hi = t.box_upper()(i);
        q(i) = lo + (hi - lo) * (0.25 + 0.5 * rng.uniform());
        p(i) = rng.normal();
      }
      EvalCounters c;
      const auto fwd = leapfrog({q, p}, 0.01, 10, Vector(), t, c);
      if (fwd.divergent) continue;
      const auto back = leapfrog({fwd.point.q, -fwd.point.p}, 0.01, 10, Vector(), t, c);
      worst = std::max({worst, (back.point.q - q).cwiseAbs().maxCoeff(), (back.point.p + p).cwiseAbs().maxCoeff()});
    }
  }
  double det_err = 0;
  const std::vector<TargetDensity> one_d{make_standard_gaussian(1), make_bimodal_mixture(1, 4, 0.3)};
  for (const auto& t : one_d) {
    for (int k = 0; k < 100; ++k) {
      const double q = 2 * rng.normal(), p = rng.normal(), h = 1e-5;
      auto map = [&](double qq, double pp) {
        EvalCounters c;
        const auto r = leapfrog({fixtures::vec({qq}), fixtures::vec({pp})}, 0.2, 1, Vector(), t, c);
        return std::pair{r.point.q(0), r.point.p(0)};
      };
      const auto [qa, pa] = map(q + h, p);
      const auto [qb, pb] = map(q - h, p);
      const auto [qc, pc] = map(q, p + h);
      const auto [qd, pd] = map(q, p - h);
      const double det = (qa - qb) / (2 * h) * (pc - pd) / (2 * h) - (qc - qd) / (2 * h) * (pa - pb) / (2 * h);
      det_err = std::max(det_err, std::abs(det - 1));
    }
  }
  o.require(worst <= 1e-10, "reversibility");
  o.require(det_err <= 1e-6, "volume");
  o.detail << "reversibility err=" << fmt(worst) << " |det-1|=" << fmt(det_err);
}

// ---- 3 ------------------------------------------------------------------------
double max_energy_error(const TargetDensity& t, const PhasePoint& start, double eps, int steps) {
  EvalCounters c;
  const double h0 = hamiltonian(start, Vector(), t);
  PhasePoint pt = start;
  double worst = 0;
  for (int i = 0; i < steps; ++i) {
    pt = leapfrog(pt, eps, 1, Vector(), t, c).point;
    worst = std::max(worst, std::abs(hamiltonian(pt, Vector(), t) - h0));
  }
  return worst;
}

void energy_order(Outcome& o) {
  const auto t = make_standard_gaussian(10);
  RngStream rng(103, 0);
  double lo = 1e9, hi = 0;
  for (int k = 0; k < 20; ++k) {
    Vector q(10), p(10);
    for (int i = 0; i < 10; ++i) q(i) = rng.normal(), p(i) = rng.normal();
    const double ratio = max_energy_error(t, {q, p}, 0.2, 10) / max_energy_error(t, {q, p}, 0.1, 20);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  o.require(lo >= 3 && hi <= 5, "ratio outside [3,5]");
  o.detail << "ratio range [" << fmt(lo) << ", " << fmt(hi) << "] over 20 trajectories";
}

// ---- 4 ------------------------------------------------------------------------
void moment_recovery(Outcome& o) {
  const TargetSpec target{"standard_gaussian", {{"dim", 10}}};
  const std::vector<SamplerSpec> samplers{{"rwm", {}, {}},
                                          {"mala", {}, {}},
                                          {"hmc", {{"epsilon", 0.1}, {"n_leapfrog", 20}, {"adapt", 0}}, {}},
                                          {"nuts", {}, {}},
                                          {"gibbs", {}, {}}};
  for (const auto& s : samplers) {
    ExperimentConfig c;
    c.target = target;
    c.sampler = s;
    c.n_chains = 4;
    c.n_warmup = 2000;
    c.n_samples = 50000;
    c.seed = 104;
    c.workers = 4;
    const auto r = execute_experiment(c).report;
    const double me = r.mean_error->cwiseAbs().maxCoeff();
    const double ve = r.var_error->cwiseAbs().maxCoeff();
    o.require(me <= 0.05, s.name + " mean");
    o.require(ve <= 0.1, s.name + " var");
    o.detail << s.name << " |mean|=" << fmt(me, 3) << " |var-1|=" << fmt(ve, 3) << "; ";
  }
}

// ---- 5 ------------------------------------------------------------------------
void gibbs_exactness(Outcome& o) {
  const auto t = make_ar1_gaussian(2, 0.9);
  const auto fcds = FullConditionalSet::gaussian(*t.analytic_mean(), *t.analytic_cov());
  EvalCounters c;
  ChainState s = make_state(t, Vector::Zero(2), c);
  RngStream rng(105, 0);
  const int n = 50000;
  Matrix x(n, 2);
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    const Transition tr = gibbs_step(s, fcds, t, rng, c);
    accepted += tr.accepted;
    s = tr.state;
    x.row(i) = s.position.transpose();
  }
  const Vector m = x.colwise().mean();
  const Matrix cen = x.rowwise() - m.transpose();
  const Matrix cov = cen.transpose() * cen / (n - 1);
  const double corr = cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
  o.require(accepted == n, "acceptance");
  o.require(std::abs(corr - 0.9) <= 0.02, "correlation");
  o.detail << "acceptance=" << fmt(static_cast<double>(accepted) / n, 6) << " corr=" << fmt(corr);
}

// ---- 6 ------------------------------------------------------------------------
void rwm_scaling(Outcome& o) {
  ExperimentConfig base;
  base.target = {"standard_gaussian", {{"dim", 2}}};
  base.sampler = {"rwm", {}, {}};
  base.n_warmup = 5000;
  base.n_samples = 2000;
  base.seed = 106;
  const auto r = scaling_study(base, {2, 4, 8, 16, 32, 64});
  const double slope = *r.slope;
  o.require(slope >= -0.65 && slope <= -0.35, "slope");
  o.detail << "slope=" << fmt(slope) << " sigma*:";
  for (const auto& row : r.rows) o.detail << " d" << row.dim << "=" << fmt(row.step_size, 3) << "(acc " << fmt(row.acceptance, 3) << ")";
}

// ---- 7 ------------------------------------------------------------------------
void efficiency_ordering(Outcome& o) {
  const TargetSpec target{"ar1_gaussian", {{"dim", 50}, {"rho", 0.95}}};
  auto rate = [&](const std::string& name) {
    ExperimentConfig c;
    c.target = target;
    c.sampler = {name, {}, {}};
    c.n_chains = 4;
    c.n_warmup = 5000;
    c.n_samples = 20000;
    c.seed = 107;
    c.init = {InitMode::zero, {}};
    c.workers = 4;
    return execute_experiment(c).report.ess_per_step;
  };
  const double rwm = rate("rwm"), mala = rate("mala"), nuts = rate("nuts");
  o.require(nuts >= 5 * rwm, "nuts vs rwm");
  o.require(mala >= 1.5 * rwm, "mala vs rwm");
  o.detail << "ESS/step rwm=" << fmt(rwm) << " mala=" << fmt(mala) << " nuts=" << fmt(nuts)
           << " (nuts/rwm=" << fmt(nuts / rwm, 3) << ", mala/rwm=" << fmt(mala / rwm, 3) << ")";
}

// ---- 8 ------------------------------------------------------------------------
void ess_calibration(Outcome& o) {
  for (double rho : {0.0, 0.3, 0.5, 0.8}) {
    const double r = ess(fixtures::ar1_series(100000, rho, 108)) / 100000.0;
    const double expect = (1 - rho) / (1 + rho);
    o.require(std::abs(r / expect - 1) <= 0.15, "rho=" + fmt(rho));
    o.detail << "rho=" << rho << ": " << fmt(r, 3) << " vs " << fmt(expect, 3) << "; ";
  }
}

// ---- 9 ------------------------------------------------------------------------
void rhat_behavior(Outcome& o) {
  std::vector<Matrix> same;
  for (std::uint64_t c = 0; c < 4; ++c) same.push_back(fixtures::gaussian_draws(10000, {0, 0}, {1, 1}, 109 + c));
  const double r_same = gelman_rubin(same).maxCoeff();
  const double r_sep = gelman_rubin({fixtures::gaussian_draws(10000, {0}, {1}, 120),
                                     fixtures::gaussian_draws(10000, {3}, {1}, 121)})(0);
  o.require(r_same < 1.01, "same distribution");
  o.require(r_sep > 1.2, "separated");
  o.detail << "same=" << fmt(r_same, 5) << " separated=" << fmt(r_sep);
}

// ---- 10 -----------------------------------------------------------------------
void gap_multimodal(Outcome& o) {
  std::vector<ExperimentConfig> configs;
  for (const auto& c : comparison_bundle("gap1_multimodal", 20240601))
    if (c.sampler.name != "nuts") configs.push_back(c);
  configs[0].workers = configs[1].workers = 1;
  const auto rows = compare_experiments(configs);
  for (const auto& r : rows) {
    const double occ = *r.occupancy_positive;
    if (r.sampler == "rwm") o.require(occ < 0.01, "rwm escaped");
    else o.require(occ >= 0.45 && occ <= 0.55, "mixture occupancy");
    o.detail << r.sampler << " occupancy(+)=" << fmt(occ, 3) << " jumps=" << *r.mode_jumps << "; ";
  }
}

// ---- 11 -----------------------------------------------------------------------
void gap_expensive(Outcome& o) {
  const auto rows = compare_experiments(comparison_bundle("gap3_expensive", 20240601));
  const auto& rwm = rows[0].sampler == "rwm" ? rows[0] : rows[1];
  const auto& da = rows[0].sampler == "rwm" ? rows[1] : rows[0];
  const auto& a = rwm.report;
  const auto& b = da.report;
  double worst_sigma = 0;
  for (Eigen::Index j = 0; j < a.sample_mean.size(); ++j) {
    const double se_mean = std::hypot(a.mcse_mean(j), b.mcse_mean(j));
    const double se_var = std::sqrt(2 * a.sample_var(j) * a.sample_var(j) / a.ess(j) +
                                    2 * b.sample_var(j) * b.sample_var(j) / b.ess(j));
    worst_sigma = std::max({worst_sigma, std::abs(a.sample_mean(j) - b.sample_mean(j)) / se_mean,
                            std::abs(a.sample_var(j) - b.sample_var(j)) / se_var});
  }
  const double saving = 1.0 - static_cast<double>(b.counters.target) / static_cast<double>(a.counters.target);
  o.require(worst_sigma <= 3, "moments");
  o.require(saving >= 0.4, "true evaluations");
  o.detail << "max moment gap=" << fmt(worst_sigma, 3) << " MC-sigma; true evals rwm=" << a.counters.target
           << " da=" << b.counters.target << " (" << fmt(100 * saving, 3) << "% fewer)";
}

// ---- 12 -----------------------------------------------------------------------
void gap_tuning(Outcome& o) {
  for (const auto& [name, goal] : {std::pair{std::string("hmc"), 0.65}, std::pair{std::string("nuts"), 0.8}}) {
    ExperimentConfig c;
    c.target = {"standard_gaussian", {{"dim", 10}}};
    c.sampler = {name, {}, {}};
    c.n_chains = 4;
    c.n_warmup = 2000;
    c.n_samples = 100;
    c.seed = 112;
    c.workers = 4;
    const double acc = execute_experiment(c).report.extras.at("warmup_accept_last_quarter");
    o.require(std::abs(acc - goal) <= 0.05, name);
    o.detail << name << " last-quarter acceptance=" << fmt(acc, 3) << " (target " << goal << "); ";
  }
  TuningJob job;
  job.sampler = "rwm";
  job.box = {{"sigma", 0.05, 5.0, true}};
  job.budget = 16;
  job.pilot_length = 5000;
  RngStream rng(112, 0xffffffffULL);
  const auto r = tune_by_ess(job, make_standard_gaussian(10), rng);
  const double acc = r.best_record.accept_rate;
  o.require(acc >= 0.15 && acc <= 0.35, "tuned rwm acceptance");
  o.detail << "tune_by_ess sigma=" << fmt(r.best.at("sigma"), 3) << " acceptance=" << fmt(acc, 3);
}

// ---- 13 -----------------------------------------------------------------------
void advisor_table(Outcome& o) {
  int checked = 0, wrong = 0;
  for (bool diff : {false, true})
    for (bool fcds : {false, true})
      for (bool corr : {false, true})
        for (bool bb : {false, true})
          for (bool mm : {false, true})
            for (std::size_t dim : {1, 20, 21, 500}) {
              const auto r = recommend({diff, fcds, dim, corr, bb, mm});
              SamplerChoice want = SamplerChoice::rwm;
              if (!diff) want = fcds ? SamplerChoice::gibbs : SamplerChoice::rwm;
              else if (dim > 20 || corr) want = bb ? SamplerChoice::nuts : SamplerChoice::hmc;
              const bool mix = std::find(r.suggested_augmentations.begin(), r.suggested_augmentations.end(),
                                         Augmentation::mixture_proposal) != r.suggested_augmentations.end();
              wrong += r.primary_choice != want || r.multimodality_warning != mm || mix != mm ||
                       r.justification.empty();
              ++checked;
            }
  const bool ex1 = recommend({false, true, 50, true, false, false}).primary_choice == SamplerChoice::gibbs;
  const bool ex2 = recommend({true, false, 100, true, true, false}).primary_choice == SamplerChoice::nuts;
  const auto r3 = recommend({true, false, 5, false, true, true});
  const bool ex3 = r3.primary_choice == SamplerChoice::rwm && r3.multimodality_warning;
  o.require(wrong == 0, "table");
  o.require(ex1 && ex2 && ex3, "examples");
  o.detail << checked << " profiles, " << wrong << " mismatches";
}

// ---- 14 -----------------------------------------------------------------------
void gradient_fidelity(Outcome& o) {
  const std::vector<TargetDensity> ts{make_standard_gaussian(10), make_ar1_gaussian(10, 0.95), make_funnel(10),
                                      make_banana(), make_bimodal_mixture(10, 8, 0.5), make_bimodal_mixture(3, 5, 0.2)};
  for (const auto& t : ts) {
    const Matrix pts = halton_design(t.box_lower(), t.box_upper(), 100);
    double worst = 0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) worst = std::max(worst, fd_gradient_check(t, pts.row(i).transpose(), 1e-5));
    o.require(worst < 1e-4, t.name());
    o.detail << t.name() << "=" << fmt(worst, 2) << " ";
  }
}

// ---- 15 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reproducibility(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "mcx_acceptance_repro";
  fs::remove_all(root);
  const std::vector<SamplerSpec> samplers{{"rwm", {}, {}}, {"nuts", {}, {}}, {"mwg", {}, {}},
                                          {"da_rwm", {}, {}}, {"gmm_independence", {{"pilot_length", 500}}, {}}};
  int identical = 0;
  for (const auto& s : samplers) {
    ExperimentConfig c;
    c.target = {"banana", {}};
    c.sampler = s;
    c.n_chains = 3;
    c.n_warmup = 500;
    c.n_samples = 2000;
    c.seed = 115;
    c.rhat = true;
    c.write_samples = true;
    std::string first;
    bool same = true;
    for (std::size_t workers : {1, 3}) {
      c.workers = workers;
      c.output_dir = root / (s.name + std::to_string(workers));
      run_experiment(c);
      const std::string bytes = slurp(c.output_dir / "diagnostics.json") + slurp(c.output_dir / "diagnostics.csv") +
                                slurp(c.output_dir / "samples.csv");
      if (first.empty()) first = bytes;
      else same = same && bytes == first;
    }
    o.require(same, s.name);
    identical += same;
  }
  fs::remove_all(root);
  o.detail << identical << "/" << samplers.size() << " samplers byte-identical across reruns";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"exact stationarity", exact_stationarity},
      {"leapfrog reversibility and volume", leapfrog_geometry},
      {"energy error order", energy_order},
      {"moment recovery", moment_recovery},
      {"gibbs exactness", gibbs_exactness},
      {"rwm step-size scaling", rwm_scaling},
      {"efficiency ordering", efficiency_ordering},
      {"ess calibration", ess_calibration},
      {"r-hat behavior", rhat_behavior},
      {"multimodality gap", gap_multimodal},
      {"expensive likelihood gap", gap_expensive},
      {"tuning gap", gap_tuning},
      {"advisor table", advisor_table},
      {"gradient fidelity", gradient_fidelity},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.passed;
    std::printf("%s %2zu %-36s %s (%.1fs)\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
