#include "mcx/diagnostics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "json.hpp"

namespace mcx {

namespace {

void require_variance(const Vector& series) {
  const double mean = series.mean();
  const double c0 = (series.array() - mean).square().sum();
  if (!(c0 > 0.0) || !std::isfinite(c0)) {
    throw DegenerateChainError("series has zero variance");
  }
}

// Biased autocovariances c_k = (1/N) sum (x_t - xbar)(x_{t+k} - xbar), k = 0..N-1.
Vector autocovariance_fft(const Vector& series) {
  const auto n = static_cast<std::size_t>(series.size());
  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  const double mean = series.mean();
  std::vector<double> buf(padded, 0.0);
  for (std::size_t t = 0; t < n; ++t) buf[t] = series(static_cast<Eigen::Index>(t)) - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, buf);
  for (auto& z : freq) z = std::complex<double>(std::norm(z), 0.0);
  std::vector<double> back;
  fft.inv(back, freq);

  Vector acov(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) acov(static_cast<Eigen::Index>(k)) = back[k] / static_cast<double>(n);
  return acov;
}

}  // namespace

Vector autocorrelation(const Vector& series, std::size_t max_lag) {
  const auto n = static_cast<std::size_t>(series.size());
  if (n < 2 || n < 2 * max_lag) throw InputError("autocorrelation: need N >= 2 * max_lag");
  require_variance(series);
  const double mean = series.mean();
  const Vector centered = series.array() - mean;
  const double c0 = centered.squaredNorm() / static_cast<double>(n);
  Vector rho(static_cast<Eigen::Index>(max_lag + 1));
  rho(0) = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const auto len = static_cast<Eigen::Index>(n - k);
    const double ck = centered.head(len).dot(centered.segment(static_cast<Eigen::Index>(k), len)) /
                      static_cast<double>(n);
    rho(static_cast<Eigen::Index>(k)) = ck / c0;
  }
  return rho;
}

double ess(const Vector& series) {
  const auto n = static_cast<std::size_t>(series.size());
  if (n < 4) throw InputError("ess: need at least 4 draws");
  require_variance(series);
  const Vector acov = autocovariance_fft(series);
  const double c0 = acov(0);

  // tau = -1 + 2 sum_k (rho_{2k} + rho_{2k+1}) over the initial positive sequence.
  double pair_sum = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (acov(static_cast<Eigen::Index>(2 * k)) + acov(static_cast<Eigen::Index>(2 * k + 1))) / c0;
    if (pair <= 0.0) break;
    pair_sum += pair;
  }
  const double tau = -1.0 + 2.0 * pair_sum;
  const double nd = static_cast<double>(n);
  if (!(tau > 0.0)) return nd;
  return std::min(nd, nd / tau);
}

Vector gelman_rubin(const std::vector<Matrix>& chains) {
  if (chains.size() < 2) throw InputError("gelman_rubin: need at least two chains");
  const Eigen::Index len = chains.front().rows();
  const Eigen::Index d = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != len || c.cols() != d) throw InputError("gelman_rubin: chains must share shape");
  }
  if (len < 4) throw InputError("gelman_rubin: need at least 4 draws per chain");

  const Eigen::Index half = len / 2;
  const double n = static_cast<double>(half);
  std::vector<Matrix> pieces;
  for (const auto& c : chains) {
    pieces.push_back(c.topRows(half));
    pieces.push_back(c.bottomRows(half));
  }
  const double m = static_cast<double>(pieces.size());

  Vector rhat(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector means(static_cast<Eigen::Index>(pieces.size()));
    double w = 0.0;
    for (std::size_t c = 0; c < pieces.size(); ++c) {
      const auto col = pieces[c].col(j);
      const double mu = col.mean();
      means(static_cast<Eigen::Index>(c)) = mu;
      w += (col.array() - mu).square().sum() / (n - 1.0);
    }
    w /= m;
    if (!(w > 0.0)) throw DegenerateChainError("gelman_rubin: zero within-chain variance");
    const double grand = means.mean();
    const double b = n * (means.array() - grand).square().sum() / (m - 1.0);
    const double var_plus = (n - 1.0) / n * w + b / n;
    rhat(j) = std::sqrt(var_plus / w);
  }
  return rhat;
}

double esjd(const Matrix& samples) {
  if (samples.rows() < 2) throw InputError("esjd: need at least two draws");
  double total = 0.0;
  for (Eigen::Index t = 0; t + 1 < samples.rows(); ++t) {
    total += (samples.row(t + 1) - samples.row(t)).squaredNorm();
  }
  return total / static_cast<double>(samples.rows() - 1);
}

double batch_means_variance(const Vector& series, std::size_t n_batches) {
  const auto n = static_cast<std::size_t>(series.size());
  if (n_batches < 10) throw InputError("batch_means_variance: need at least 10 batches");
  if (n < 2 * n_batches) throw InputError("batch_means_variance: need N >= 2 * n_batches");
  const std::size_t b = n / n_batches;
  Vector means(static_cast<Eigen::Index>(n_batches));
  for (std::size_t k = 0; k < n_batches; ++k) {
    means(static_cast<Eigen::Index>(k)) =
        series.segment(static_cast<Eigen::Index>(k * b), static_cast<Eigen::Index>(b)).mean();
  }
  const double grand = means.mean();
  const double var = (means.array() - grand).square().sum() / static_cast<double>(n_batches - 1);
  return var * static_cast<double>(b);
}

DiagnosticsReport build_report(const std::vector<ChainRecord>& chains, const TargetDensity& target,
                               const std::string& sampler) {
  if (chains.empty()) throw InputError("build_report: no chains");
  const std::size_t d = chains.front().dim();
  for (const auto& c : chains) {
    if (c.dim() != d) throw InputError("build_report: chains disagree in dimension");
    if (c.size() < 4) throw InputError("build_report: chains need at least 4 draws");
  }
  if (d != target.dim()) throw InputError("build_report: chains and target disagree in dimension");

  DiagnosticsReport r;
  r.target = target.name();
  r.sampler = sampler;
  r.n_chains = chains.size();
  r.n_samples = chains.front().size();
  r.dim = d;
  const auto dd = static_cast<Eigen::Index>(d);
  r.ess = Vector::Zero(dd);
  r.asym_variance = Vector::Zero(dd);

  std::size_t total_draws = 0;
  std::uint64_t accepted = 0;
  double esjd_sum = 0.0;
  double depth_sum = 0.0;
  double leapfrog_sum = 0.0;
  bool degenerate = false;
  for (const auto& c : chains) {
    total_draws += c.size();
    accepted += static_cast<std::uint64_t>(std::count(c.accept_flags.begin(), c.accept_flags.end(), 1));
    esjd_sum += esjd(c.samples);
    r.n_divergences += c.divergences();
    r.counters += c.counters;
    r.sampling_counters += c.sampling_counters;
    for (int depth : c.tree_depth) depth_sum += depth;
    for (auto l : c.n_leapfrog) leapfrog_sum += static_cast<double>(l);
    const std::size_t batches = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::sqrt(static_cast<double>(c.size()))), 10, 100);
    for (Eigen::Index j = 0; j < dd; ++j) {
      const Vector col = c.samples.col(j);
      try {
        r.ess(j) += ess(col);
      } catch (const DegenerateChainError&) {
        degenerate = true;
      }
      if (c.size() >= 2 * batches) r.asym_variance(j) += batch_means_variance(col, batches);
    }
  }
  r.asym_variance /= static_cast<double>(chains.size());
  r.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(total_draws);
  r.esjd = esjd_sum / static_cast<double>(chains.size());
  r.mean_tree_depth = depth_sum / static_cast<double>(total_draws);
  r.mean_leapfrog = leapfrog_sum / static_cast<double>(total_draws);
  if (degenerate) r.notes.emplace_back("degenerate (constant) coordinate: ESS reported as 0");

  Matrix pooled(static_cast<Eigen::Index>(total_draws), dd);
  Eigen::Index offset = 0;
  for (const auto& c : chains) {
    pooled.middleRows(offset, c.samples.rows()) = c.samples;
    offset += c.samples.rows();
  }
  r.sample_mean = pooled.colwise().mean().transpose();
  r.sample_var = ((pooled.rowwise() - r.sample_mean.transpose()).array().square().colwise().sum() /
                  static_cast<double>(total_draws - 1))
                     .transpose();
  r.mcse_mean = Vector(dd);
  for (Eigen::Index j = 0; j < dd; ++j) {
    r.mcse_mean(j) = r.ess(j) > 0.0 ? std::sqrt(r.sample_var(j) / r.ess(j))
                                    : std::numeric_limits<double>::infinity();
  }
  if (target.analytic_mean()) r.mean_error = r.sample_mean - *target.analytic_mean();
  if (target.analytic_cov()) r.var_error = r.sample_var - target.analytic_cov()->diagonal();

  if (chains.size() >= 2) {
    std::vector<Matrix> mats;
    bool equal = true;
    for (const auto& c : chains) {
      mats.push_back(c.samples);
      equal = equal && c.size() == chains.front().size();
    }
    if (equal) {
      try {
        r.rhat = gelman_rubin(mats);
        const double worst = r.rhat->maxCoeff();
        if (worst > kRhatWarning) {
          r.notes.emplace_back("R-hat above 1.4: chains have not converged");
        } else if (worst > kRhatGood) {
          r.notes.emplace_back("R-hat above 1.01: convergence not yet established");
        }
      } catch (const DegenerateChainError&) {
        r.notes.emplace_back("R-hat undefined: zero within-chain variance");
      }
    }
  }

  r.min_ess = r.ess.minCoeff();
  r.ess_per_step = r.min_ess / static_cast<double>(total_draws);
  r.ess_per_true_eval = r.counters.target > 0 ? r.min_ess / static_cast<double>(r.counters.target) : 0.0;
  r.ess_per_grad_eval = r.counters.grad > 0 ? r.min_ess / static_cast<double>(r.counters.grad) : 0.0;
  if (r.n_divergences > 0) {
    r.notes.emplace_back(std::to_string(r.n_divergences) + " divergent transitions");
  }
  return r;
}

namespace {

nlohmann::ordered_json vec_json(const Vector& v) {
  auto arr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

nlohmann::ordered_json counters_json(const EvalCounters& c) {
  nlohmann::ordered_json j;
  j["target"] = c.target;
  j["grad"] = c.grad;
  j["surrogate"] = c.surrogate;
  return j;
}

}  // namespace

std::string report_to_json(const DiagnosticsReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = "mcx.diagnostics/1";
  j["target"] = r.target;
  j["sampler"] = r.sampler;
  j["n_chains"] = r.n_chains;
  j["n_samples"] = r.n_samples;
  j["dim"] = r.dim;
  j["ess"] = vec_json(r.ess);
  j["rhat"] = r.rhat ? vec_json(*r.rhat) : nlohmann::ordered_json(nullptr);
  j["acceptance_rate"] = r.acceptance_rate;
  j["esjd"] = r.esjd;
  j["asym_variance"] = vec_json(r.asym_variance);
  j["n_divergences"] = r.n_divergences;
  j["counters"] = counters_json(r.counters);
  j["sampling_counters"] = counters_json(r.sampling_counters);
  j["min_ess"] = r.min_ess;
  j["ess_per_step"] = r.ess_per_step;
  j["ess_per_true_eval"] = r.ess_per_true_eval;
  j["ess_per_grad_eval"] = r.ess_per_grad_eval;
  j["mean_tree_depth"] = r.mean_tree_depth;
  j["mean_leapfrog"] = r.mean_leapfrog;
  j["sample_mean"] = vec_json(r.sample_mean);
  j["sample_var"] = vec_json(r.sample_var);
  j["mcse_mean"] = vec_json(r.mcse_mean);
  j["mean_error"] = r.mean_error ? vec_json(*r.mean_error) : nlohmann::ordered_json(nullptr);
  j["var_error"] = r.var_error ? vec_json(*r.var_error) : nlohmann::ordered_json(nullptr);
  j["extras"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.extras) j["extras"][k] = v;
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const DiagnosticsReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "dim,ess,rhat,asym_variance,mean,var,mcse_mean\n";
  for (std::size_t i = 0; i < r.dim; ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out << i << ',' << r.ess(j) << ',';
    if (r.rhat) out << (*r.rhat)(j);
    out << ',' << r.asym_variance(j) << ',' << r.sample_mean(j) << ',' << r.sample_var(j) << ','
        << r.mcse_mean(j) << '\n';
  }
  return out.str();
}

}  // namespace mcx
