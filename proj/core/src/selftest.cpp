#include "mcx/selftest.hpp"

#include <cmath>
#include <sstream>

#include "mcx/adaptation.hpp"
#include "mcx/advisor.hpp"
#include "mcx/diagnostics.hpp"
#include "mcx/gradient.hpp"
#include "mcx/targets.hpp"

namespace mcx {

namespace {

std::string num(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

SelfTestResult stationarity() {
  const Vector pi = (Vector(3) << 0.2, 0.3, 0.5).finished();
  const Matrix q = Matrix::Constant(3, 3, 1.0 / 3.0);
  const auto r = discrete_stationarity_oracle(pi, q);
  const double worst = std::max(r.max_deviation, r.max_detailed_balance_violation);
  return {"exact_stationarity", worst < 1e-12, "max violation " + num(worst)};
}

SelfTestResult reversibility() {
  const TargetDensity target = make_standard_gaussian(5);
  const Vector mass = Vector::Ones(5);
  RngStream rng(2024, 0);
  EvalCounters counters;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    PhasePoint start{Vector(5), Vector(5)};
    for (Eigen::Index j = 0; j < 5; ++j) {
      start.q(j) = rng.normal();
      start.p(j) = rng.normal();
    }
    const LeapfrogResult fwd = leapfrog(start, 0.1, 20, mass, target, counters);
    const PhasePoint flipped{fwd.point.q, -fwd.point.p};
    const LeapfrogResult back = leapfrog(flipped, 0.1, 20, mass, target, counters);
    worst = std::max({worst, (back.point.q - start.q).cwiseAbs().maxCoeff(),
                      (back.point.p + start.p).cwiseAbs().maxCoeff()});
  }
  return {"leapfrog_reversibility", worst <= 1e-10, "max error " + num(worst)};
}

SelfTestResult gradients() {
  const std::vector<TargetDensity> targets{make_standard_gaussian(4), make_ar1_gaussian(6, 0.9),
                                           make_funnel(5), make_banana(),
                                           make_bimodal_mixture(3, 8.0, 0.3)};
  RngStream rng(7, 0);
  double worst = 0.0;
  for (const auto& t : targets) {
    for (int i = 0; i < 20; ++i) {
      Vector x(static_cast<Eigen::Index>(t.dim()));
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        x(j) = t.box_lower()(j) + (t.box_upper()(j) - t.box_lower()(j)) * rng.uniform();
      }
      worst = std::max(worst, fd_gradient_check(t, x, 1e-5));
    }
  }
  return {"gradient_fidelity", worst < 1e-4, "max relative error " + num(worst)};
}

SelfTestResult ess_calibration() {
  RngStream rng(11, 0);
  const std::size_t n = 100000;
  const double rho = 0.5;
  Vector x(static_cast<Eigen::Index>(n));
  x(0) = rng.normal();
  for (Eigen::Index t = 1; t < x.size(); ++t) x(t) = rho * x(t - 1) + std::sqrt(1 - rho * rho) * rng.normal();
  const double ratio = ess(x) / static_cast<double>(n);
  const double expected = (1 - rho) / (1 + rho);
  return {"ess_calibration", std::abs(ratio / expected - 1.0) < 0.15,
          "ESS/N " + num(ratio) + " vs " + num(expected)};
}

SelfTestResult advisor_examples() {
  const bool a = recommend({false, true, 3, false, false, false}).primary_choice == SamplerChoice::gibbs;
  const bool b = recommend({true, false, 100, true, true, false}).primary_choice == SamplerChoice::nuts;
  const Recommendation c = recommend({true, false, 5, false, true, true});
  const bool cc = c.primary_choice == SamplerChoice::rwm && c.multimodality_warning;
  return {"advisor_examples", a && b && cc, "gibbs/nuts/rwm+warning"};
}

SelfTestResult dual_averaging() {
  DualAveragingState da = DualAveragingState::start(0.5, 0.8);
  for (int i = 0; i < 50; ++i) da = dual_averaging_update(da, 0.8);
  return {"dual_averaging_fixed_point", da.h_bar == 0.0 && da.log_eps == da.mu, "h_bar " + num(da.h_bar)};
}

}  // namespace

std::vector<SelfTestResult> run_selftests() {
  return {stationarity(), reversibility(), gradients(), ess_calibration(), advisor_examples(),
          dual_averaging()};
}

}  // namespace mcx
