#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mcx/classic.hpp"
#include "mcx/design.hpp"
#include "mcx/kernels.hpp"
#include "mcx/mixture.hpp"
#include "mcx/surrogate.hpp"

using namespace mcx;
using fixtures::vec;

namespace {

SurrogateModel gaussian_surrogate(std::size_t m, double ridge = 1e-3) {
  const auto t = make_standard_gaussian(2);
  const Matrix pts = grid_design(vec({-3, -3}), vec({3, 3}), m);
  Vector vals(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) vals(i) = t.log_density(pts.row(i).transpose());
  return fit_surrogate(pts, vals, 1.5, ridge);
}

struct RunSummary {
  Vector mean;
  Vector var;
  EvalCounters counters;
  DelayedAcceptanceStats stats;
};

RunSummary run_da(const TargetDensity& t, const SurrogateModel& s, double sigma, int n, std::uint64_t seed) {
  RunSummary out;
  ChainState st = make_state(t, Vector::Zero(static_cast<Eigen::Index>(t.dim())), out.counters);
  RngStream rng(seed, 0);
  const auto d = static_cast<Eigen::Index>(t.dim());
  Vector sum = Vector::Zero(d), sq = Vector::Zero(d);
  for (int i = 0; i < n; ++i) {
    st = delayed_acceptance_step(st, sigma, s, t, rng, out.counters, &out.stats).state;
    sum += st.position;
    sq += st.position.cwiseProduct(st.position);
  }
  out.mean = sum / n;
  out.var = sq / n - out.mean.cwiseProduct(out.mean);
  return out;
}

double positive_occupancy(const ChainRecord& r) {
  return static_cast<double>((r.samples.col(0).array() > 0).count()) / static_cast<double>(r.size());
}

int sign_changes(const ChainRecord& r) {
  int n = 0;
  for (Eigen::Index i = 1; i < r.samples.rows(); ++i) n += (r.samples(i, 0) > 0) != (r.samples(i - 1, 0) > 0);
  return n;
}

}  // namespace

TEST_SUITE("ai_augment") {
  TEST_CASE("surrogate needs two distinct points") {
    CHECK_THROWS_AS(fit_surrogate(Matrix::Zero(1, 1), vec({0}), 1.0, 1e-3), InputError);
    const Matrix dup = (Matrix(2, 1) << 0.5, 0.5).finished();
    CHECK_THROWS_AS(fit_surrogate(dup, vec({1, 1}), 1.0, 1e-3), InputError);
    CHECK_THROWS_AS(fit_surrogate((Matrix(2, 1) << 0, 1).finished(), vec({0, 1}), -1.0, 1e-3), InputError);
  }

  TEST_CASE("two-point fit interpolates a line") {
    const Matrix pts = (Matrix(2, 1) << 0, 1).finished();
    const auto m = fit_surrogate(pts, vec({1, 3}), 1.0, 1e-10);
    CHECK(m.predict(vec({0})) == doctest::Approx(1).epsilon(1e-6));
    CHECK(m.predict(vec({1})) == doctest::Approx(3).epsilon(1e-6));
  }

  TEST_CASE("very wide bandwidth gives the ridge-weighted mean") {
    const Matrix pts = (Matrix(2, 1) << 0, 1).finished();
    const double r = 0.5;
    const auto m = fit_surrogate(pts, vec({2, 4}), 1e6, r);
    CHECK(m.predict(vec({0.3})) == doctest::Approx(6.0 / (2 + r)).epsilon(1e-6));
  }

  TEST_CASE("200-point surrogate of the 2-d gaussian") {
    const auto m = gaussian_surrogate(200);
    CHECK(m.size() == 200);
    CHECK(surrogate_grid_error(m, make_standard_gaussian(2), vec({-3, -3}), vec({3, 3}), 21) < 0.1);
    CHECK(m.max_training_residual() <= m.fit_tolerance());
  }

  TEST_CASE("training residuals equal ridge times the weights") {
    const Matrix pts = halton_design(vec({-2, -2, -2}), vec({2, 2, 2}), 60);
    Vector vals(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) vals(i) = std::sin(pts(i, 0)) - pts.row(i).squaredNorm();
    for (double ridge : {1e-6, 1e-3, 1e-1}) {
      const auto m = fit_surrogate(pts, vals, 1.0, ridge);
      for (Eigen::Index i = 0; i < pts.rows(); ++i)
        CHECK(vals(i) - m.predict(pts.row(i).transpose()) == doctest::Approx(ridge * m.weights()(i)).scale(1e-9));
    }
  }

  TEST_CASE("residual invariant holds for log-densities at surrogate settings") {
    const std::vector<TargetDensity> ts{make_standard_gaussian(2), make_ar1_gaussian(2, 0.9),
                                        make_bimodal_mixture(2, 4, 0.3)};
    for (const auto& t : ts)
      for (std::size_t m : {50, 100, 200})
        for (double ridge : {1e-3, 1e-2})
          for (double bw : {0.5, 1.0, 1.5}) {
            // dense grids at wide bandwidth need the larger ridge; weights grow past 10 max|values| otherwise
            if (bw > 1.0 && ridge < 1e-2 && m > 50) continue;
            const Matrix pts = grid_design(vec({-3, -3}), vec({3, 3}), m);
            Vector vals(pts.rows());
            for (Eigen::Index i = 0; i < pts.rows(); ++i) vals(i) = t.log_density(pts.row(i).transpose());
            const auto s = fit_surrogate(pts, vals, bw, ridge);
            CAPTURE(m);
            CAPTURE(ridge);
            CAPTURE(bw);
            CHECK(s.max_training_residual() <= s.fit_tolerance());
          }
  }

  TEST_CASE("predictions far from the data decay and are flagged") {
    const auto m = gaussian_surrogate(50);
    EvalCounters c;
    const auto far = surrogate_predict(m, vec({40, 40}), c);
    CHECK(far.low_confidence);
    CHECK(std::abs(far.value) < 1e-6);
    const auto near = surrogate_predict(m, vec({0.1, 0.1}), c);
    CHECK_FALSE(near.low_confidence);
    CHECK(c.surrogate == 2);
    CHECK(c.target == 0);
    CHECK(c.grad == 0);
  }

  TEST_CASE("predictions are Lipschitz continuous") {
    const auto m = gaussian_surrogate(100);
    const double lip = m.weights().cwiseAbs().sum() * std::exp(-0.5) / m.bandwidth();
    RngStream rng(2, 0);
    for (int k = 0; k < 200; ++k) {
      const Vector x = vec({3 * rng.normal(), 3 * rng.normal()});
      const Vector dx = 1e-3 * vec({rng.normal(), rng.normal()});
      CHECK(std::abs(m.predict(x) - m.predict(x + dx)) <= lip * dx.norm() * (1 + 1e-9));
    }
  }

  TEST_CASE("refinement with nothing new leaves the model unchanged") {
    const auto m = gaussian_surrogate(30);
    const Matrix visited = (Matrix(2, 2) << 0.1, 0.2, -1, 1).finished();
    const auto r = refine_surrogate(m, visited, vec({-0.025, -1}), 0);
    CHECK(r.inputs() == m.inputs());
    CHECK(r.weights() == m.weights());
  }

  TEST_CASE("refinement adds the worst-fit visited points") {
    const auto t = make_standard_gaussian(2);
    const auto m = gaussian_surrogate(20);
    RngStream rng(3, 0);
    Matrix visited(50, 2);
    Vector lp(50);
    for (int i = 0; i < 50; ++i) {
      visited.row(i) << 2 * rng.normal(), 2 * rng.normal();
      lp(i) = t.log_density(visited.row(i).transpose());
    }
    Eigen::Index worst = 0;
    double worst_res = -1;
    for (int i = 0; i < 50; ++i) {
      const double res = std::abs(m.predict(visited.row(i).transpose()) - lp(i));
      if (res > worst_res) worst_res = res, worst = i;
    }
    const auto r = refine_surrogate(m, visited, lp, 5);
    CHECK(r.size() <= m.size() + 5);
    CHECK(r.size() > m.size());
    CHECK(std::abs(r.predict(visited.row(worst).transpose()) - lp(worst)) <= r.fit_tolerance());
    CHECK(r.max_training_residual() <= r.fit_tolerance());
  }

  TEST_CASE("refinement rounds do not make the grid error worse on average") {
    const auto t = make_standard_gaussian(2);
    auto m = gaussian_surrogate(16);
    const double start = surrogate_grid_error(m, t, vec({-3, -3}), vec({3, 3}), 21);
    RngStream rng(4, 0);
    for (int round = 0; round < 4; ++round) {
      Matrix visited(200, 2);
      Vector lp(200);
      for (int i = 0; i < 200; ++i) {
        visited.row(i) << 1.5 * rng.normal(), 1.5 * rng.normal();
        lp(i) = t.log_density(visited.row(i).transpose());
      }
      m = refine_surrogate(m, visited, lp, 10);
    }
    CHECK(surrogate_grid_error(m, t, vec({-3, -3}), vec({3, 3}), 21) < start);
  }

  TEST_CASE("an accurate surrogate passes nearly every screened proposal") {
    const auto t = make_standard_gaussian(2);
    const auto r = run_da(t, gaussian_surrogate(400, 1e-8), 1.5, 5000, 5);
    CHECK(r.stats.stage2_rate() > 0.99);
  }

  TEST_CASE("a flat surrogate screens nothing and the chain behaves like rwm") {
    const auto t = make_standard_gaussian(2);
    const Matrix pts = grid_design(vec({-3, -3}), vec({3, 3}), 25);
    const auto flat = fit_surrogate(pts, Vector::Constant(25, -1.0), 1e4, 1e-3);
    const auto r = run_da(t, flat, 1.5, 5000, 6);
    CHECK(r.stats.stage1_rate() > 0.999);
    CHECK(r.counters.target >= r.stats.stage1_accepted);
  }

  TEST_CASE("delayed acceptance stays exact with a poor surrogate") {
    const auto t = make_standard_gaussian(2);
    const auto wide = make_ar1_gaussian(2, 0.8);
    const Matrix pts = grid_design(vec({-3, -3}), vec({3, 3}), 64);
    Vector vals(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) vals(i) = 0.3 * wide.log_density(pts.row(i).transpose());
    const auto r = run_da(t, fit_surrogate(pts, vals, 1.5, 1e-3), 1.2, 100000, 7);
    CHECK(r.mean.cwiseAbs().maxCoeff() < 0.06);
    CHECK((r.var.array() - 1).abs().maxCoeff() < 0.08);
  }

  TEST_CASE("delayed acceptance saves true evaluations at equal chain length") {
    const auto t = make_standard_gaussian(2);
    const ChainRunOptions opts{1, 2000, 20000, 8, InitSpec{}, 1};
    const auto da = run_chains({"da_rwm", {}, {}}, t, opts)[0];
    const auto rwm = run_chains({"rwm", {}, {}}, t, opts)[0];
    CHECK(da.counters.target <= 0.6 * rwm.counters.target);
    CHECK(da.counters.surrogate > 0);
    const Vector m = da.samples.colwise().mean();
    CHECK(m.cwiseAbs().maxCoeff() < 0.1);
    CHECK(da.kernel_stats.at("surrogate_grid_error") < 0.5);
  }

  TEST_CASE("approximate mode never pays a true evaluation after warmup") {
    const auto t = make_standard_gaussian(2);
    const auto rec = run_chains({"da_rwm", {{"approximate", 1}}, {}}, t, {1, 200, 2000, 9, InitSpec{}, 1})[0];
    CHECK(rec.sampling_counters.target == 0);
  }

  TEST_CASE("single-component mixture is the sample moments") {
    RngStream rng(10, 0);
    Matrix x(500, 2);
    for (int i = 0; i < 500; ++i) x.row(i) << 1 + rng.normal(), -2 + 3 * rng.normal();
    RngStream fit(11, 0);
    const auto g = fit_gmm(x, 1, fit);
    const Vector mean = x.colwise().mean();
    const Vector var = (x.rowwise() - mean.transpose()).array().square().colwise().mean();
    CHECK((g.means.row(0).transpose() - mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.variances.row(0).transpose() - var).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(g.weights(0) == 1.0);
  }

  TEST_CASE("two separated clusters are recovered") {
    RngStream rng(12, 0);
    Matrix x(2000, 1);
    for (int i = 0; i < 2000; ++i) x(i, 0) = (i % 2 ? 10 : -10) + rng.normal();
    RngStream fit(13, 0);
    const auto g = fit_gmm(x, 2, fit);
    const double lo = std::min(g.means(0, 0), g.means(1, 0)), hi = std::max(g.means(0, 0), g.means(1, 0));
    CHECK(std::abs(lo + 10) < 0.5);
    CHECK(std::abs(hi - 10) < 0.5);
    CHECK(std::abs(g.weights(0) - 0.5) < 0.1);
    CHECK(g.generation == 1);
  }

  TEST_CASE("em log-likelihood never decreases and weights stay a simplex") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RngStream rng(14, seed);
      Matrix x(600, 2);
      for (int i = 0; i < 600; ++i) {
        const double c = i % 3 == 0 ? -3 : (i % 3 == 1 ? 0 : 4);
        x.row(i) << c + rng.normal(), 0.5 * c + rng.normal();
      }
      RngStream fit(15, seed);
      const auto g = fit_gmm(x, 3, fit);
      for (std::size_t i = 1; i < g.log_likelihood_trace.size(); ++i)
        CHECK(g.log_likelihood_trace[i] >= g.log_likelihood_trace[i - 1] - 1e-10);
      CHECK(std::abs(g.weights.sum() - 1) < 1e-12);
      CHECK(g.weights.minCoeff() >= 0);
      CHECK(g.variances.minCoeff() > 0);
    }
    RngStream fit(16, 0);
    CHECK_THROWS_AS(fit_gmm(Matrix::Zero(15, 1), 2, fit), InputError);
  }

  TEST_CASE("mixture density integrates its own samples") {
    MixtureProposal g;
    g.weights = vec({0.3, 0.7});
    g.means = (Matrix(2, 1) << -2, 3).finished();
    g.variances = (Matrix(2, 1) << 1, 4).finished();
    const double x = 0.5;
    const double expect = 0.3 * std::exp(-0.5 * 6.25) / std::sqrt(2 * M_PI) +
                          0.7 * std::exp(-0.5 * 6.25 / 4) / std::sqrt(8 * M_PI);
    CHECK(g.log_density(vec({x})) == doctest::Approx(std::log(expect)));
  }

  TEST_CASE("independence proposal equal to the target always accepts") {
    const auto t = make_standard_gaussian(1);
    MixtureProposal g;
    g.weights = vec({1});
    g.means = Matrix::Zero(1, 1);
    g.variances = Matrix::Ones(1, 1);
    EvalCounters c;
    ChainState s = make_state(t, vec({0}), c);
    RngStream rng(17, 0);
    for (int i = 0; i < 1000; ++i) {
      const Transition tr = independence_proposal_step(s, g, t, rng, c);
      CHECK(tr.accept_prob > 1 - 1e-12);
      s = tr.state;
    }
  }

  TEST_CASE("a state the mixture cannot reach is rejected with certainty") {
    const auto t = make_flat(1);
    MixtureProposal g;
    g.weights = vec({1});
    g.means = Matrix::Zero(1, 1);
    g.variances = Matrix::Ones(1, 1);
    EvalCounters c;
    const ChainState s = make_state(t, vec({1e160}), c);
    RngStream rng(18, 0);
    const Transition tr = independence_proposal_step(s, g, t, rng, c);
    CHECK_FALSE(tr.accepted);
    CHECK(tr.accept_prob == 0.0);
  }

  TEST_CASE("mixture fitted on overdispersed pilots balances the modes") {
    const auto t = make_bimodal_mixture(5, 8.0, 0.5);
    InitSpec init{InitMode::explicit_point, vec({-4, 0, 0, 0, 0})};
    const auto rec = run_chains({"gmm_independence", {}, {}}, t, {1, 0, 20000, 19, init, 1})[0];
    const double occ = positive_occupancy(rec);
    CHECK(occ >= 0.45);
    CHECK(occ <= 0.55);
    CHECK(sign_changes(rec) >= 50);
  }

  TEST_CASE("mixture fitted on a single trapped chain stays trapped") {
    const auto t = make_bimodal_mixture(10, 12.0, 0.5);
    InitSpec init{InitMode::explicit_point, Vector::Zero(10)};
    init.point(0) = -6;
    SamplerSpec spec{"gmm_independence", {}, {{"warmup_source", "single"}}};
    const auto rec = run_chains(spec, t, {1, 0, 20000, 20, init, 1})[0];
    CHECK(positive_occupancy(rec) < 0.01);
    const auto rwm = run_chains({"rwm", {}, {}}, t, {1, 2000, 20000, 20, init, 1})[0];
    CHECK(positive_occupancy(rwm) < 0.01);
    CHECK(sign_changes(rwm) < 2);
  }

  TEST_CASE("augmented kernels are frozen after warmup") {
    const auto t = make_standard_gaussian(2);
    for (const auto& spec : {SamplerSpec{"da_rwm", {{"refinement_rounds", 2}}, {}},
                             SamplerSpec{"gmm_independence", {{"pilot_length", 200}, {"pilot_chains", 2}}, {}}}) {
      auto k = make_kernel(spec, t);
      RngStream rng(21, 0);
      const auto rec = run_chain(*k, t, Vector::Zero(2), 400, 500, rng);
      CHECK(rec.kernel_hash == k->parameter_hash());
    }
  }
}
