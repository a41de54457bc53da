#include "mcx/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mcx {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "invalid configuration";
  for (const auto& s : v) out += "\n  - " + s;
  return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

double ChainRecord::acceptance_rate() const {
  if (accept_flags.empty()) return 0.0;
  const auto n = std::count(accept_flags.begin(), accept_flags.end(), std::uint8_t{1});
  return static_cast<double>(n) / static_cast<double>(accept_flags.size());
}

std::uint64_t ChainRecord::divergences() const {
  return static_cast<std::uint64_t>(
      std::count(divergent.begin(), divergent.end(), std::uint8_t{1}));
}

double mh_accept_log_prob(double logpi_cur, double logpi_prop, double logg_fwd,
                          double logg_bwd) {
  if (!std::isfinite(logpi_cur)) {
    throw InvalidStateError("current state has non-finite log-density");
  }
  if (std::isnan(logpi_prop) || logpi_prop == kNegInf) return kNegInf;
  if (std::isnan(logg_bwd) || logg_bwd == kNegInf) return kNegInf;
  if (std::isnan(logg_fwd)) return kNegInf;
  const double log_ratio = (logpi_prop - logpi_cur) + (logg_bwd - logg_fwd);
  if (std::isnan(log_ratio)) return kNegInf;
  return std::min(0.0, log_ratio);
}

ChainState accept_or_reject(const ChainState& state, const ChainState& proposal,
                            double log_alpha, RngStream& rng, bool* accepted) {
  const double log_u = std::log(rng.uniform());
  const bool take = log_u < log_alpha;
  if (accepted != nullptr) *accepted = take;
  ChainState next = take ? proposal : state;
  next.step_index = state.step_index + 1;
  return next;
}

StationarityReport discrete_stationarity_oracle(const Vector& pi, const Matrix& proposal) {
  const Eigen::Index k = pi.size();
  if (k < 1 || proposal.rows() != k || proposal.cols() != k) {
    throw InputError("stationarity oracle: pi and proposal sizes disagree");
  }
  if (std::abs(pi.sum() - 1.0) > 1e-12 || (pi.array() <= 0.0).any()) {
    throw InputError("stationarity oracle: pi must be strictly positive and sum to 1");
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if ((proposal.row(i).array() < 0.0).any() ||
        std::abs(proposal.row(i).sum() - 1.0) > 1e-12) {
      throw InputError("stationarity oracle: proposal row " + std::to_string(i) +
                       " is not a probability vector");
    }
  }

  StationarityReport report;
  Matrix& p = report.transition;
  p = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i == j || proposal(i, j) == 0.0) continue;
      const double ratio = pi(j) * proposal(j, i) / (pi(i) * proposal(i, j));
      p(i, j) = proposal(i, j) * std::min(1.0, ratio);
      off += p(i, j);
    }
    p(i, i) = 1.0 - off;
  }

  const Vector moved = (pi.transpose() * p).transpose();
  report.max_deviation = (moved - pi).cwiseAbs().maxCoeff();
  double violation = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      violation = std::max(violation, std::abs(pi(i) * p(i, j) - pi(j) * p(j, i)));
    }
  }
  report.max_detailed_balance_violation = violation;
  return report;
}

}  // namespace mcx
