// Per-step cost of each kernel and of the main diagnostics.
#include <benchmark/benchmark.h>

#include "mcx/classic.hpp"
#include "mcx/diagnostics.hpp"
#include "mcx/gradient.hpp"
#include "mcx/kernels.hpp"
#include "mcx/surrogate.hpp"

using namespace mcx;

namespace {

void run_kernel(benchmark::State& state, const std::string& name, const std::map<std::string, double>& params) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto target = make_ar1_gaussian(d, 0.9);
  auto kernel = make_kernel({name, params, {}}, target);
  RngStream rng(1, 0);
  EvalCounters counters;
  const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(d));
  ChainState s = make_state(target, x0, counters, kernel->needs_gradient());
  kernel->begin_warmup(s, 0, rng, counters);
  kernel->end_warmup();
  for (auto _ : state) {
    Transition t = kernel->step(s, rng, counters);
    s = std::move(t.state);
    benchmark::DoNotOptimize(s.cached_logpi);
  }
  state.counters["target_evals/step"] = benchmark::Counter(static_cast<double>(counters.target),
                                                           benchmark::Counter::kAvgIterations);
  state.counters["grad_evals/step"] = benchmark::Counter(static_cast<double>(counters.grad),
                                                         benchmark::Counter::kAvgIterations);
}

void BM_rwm(benchmark::State& s) { run_kernel(s, "rwm", {{"sigma", 0.3}}); }
void BM_mala(benchmark::State& s) { run_kernel(s, "mala", {{"epsilon", 0.2}}); }
void BM_hmc(benchmark::State& s) { run_kernel(s, "hmc", {{"epsilon", 0.1}, {"n_leapfrog", 20}}); }
void BM_nuts(benchmark::State& s) { run_kernel(s, "nuts", {{"epsilon", 0.2}}); }
void BM_gibbs(benchmark::State& s) { run_kernel(s, "gibbs", {}); }
void BM_mwg(benchmark::State& s) { run_kernel(s, "mwg", {{"sigma", 0.5}}); }

BENCHMARK(BM_rwm)->RangeMultiplier(4)->Range(2, 128);
BENCHMARK(BM_mala)->RangeMultiplier(4)->Range(2, 128);
BENCHMARK(BM_hmc)->RangeMultiplier(4)->Range(2, 128);
BENCHMARK(BM_nuts)->RangeMultiplier(4)->Range(2, 128);
BENCHMARK(BM_gibbs)->RangeMultiplier(4)->Range(2, 32);
BENCHMARK(BM_mwg)->RangeMultiplier(4)->Range(2, 128);

void BM_leapfrog(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto target = make_standard_gaussian(static_cast<std::size_t>(d));
  const PhasePoint pt{Vector::Ones(d), Vector::Ones(d)};
  EvalCounters c;
  for (auto _ : state) benchmark::DoNotOptimize(leapfrog(pt, 0.1, 1, Vector(), target, c).point.q.data());
}
BENCHMARK(BM_leapfrog)->RangeMultiplier(4)->Range(2, 512);

void BM_surrogate_predict(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  Matrix pts(m, 2);
  Vector vals(m);
  RngStream rng(2, 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    pts.row(i) << 6 * rng.uniform() - 3, 6 * rng.uniform() - 3;
    vals(i) = -0.5 * pts.row(i).squaredNorm();
  }
  const auto model = fit_surrogate(pts, vals, 1.5, 1e-3);
  const Vector x = Vector::Constant(2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_surrogate_predict)->Arg(50)->Arg(200)->Arg(800);

void BM_ess(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Vector x(n);
  RngStream rng(3, 0);
  x(0) = rng.normal();
  for (Eigen::Index t = 1; t < n; ++t) x(t) = 0.9 * x(t - 1) + std::sqrt(0.19) * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(ess(x));
}
BENCHMARK(BM_ess)->RangeMultiplier(10)->Range(1000, 1000000);

}  // namespace

BENCHMARK_MAIN();
