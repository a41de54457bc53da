#pragma once

#include <cmath>
#include <vector>

#include "mcx/core.hpp"
#include "mcx/rng.hpp"

namespace fixtures {

/// Stationary AR(1) series with unit marginal variance.
inline mcx::Vector ar1_series(std::size_t n, double rho, std::uint64_t seed) {
  mcx::RngStream rng(seed, 0);
  mcx::Vector x(static_cast<Eigen::Index>(n));
  x(0) = rng.normal();
  const double s = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index t = 1; t < x.size(); ++t) x(t) = rho * x(t - 1) + s * rng.normal();
  return x;
}

inline mcx::Matrix gaussian_draws(std::size_t n, const std::vector<double>& mean,
                                  const std::vector<double>& sd, std::uint64_t seed) {
  mcx::RngStream rng(seed, 0);
  mcx::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(mean.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = mean[static_cast<std::size_t>(j)] + sd[static_cast<std::size_t>(j)] * rng.normal();
  return m;
}

inline mcx::Vector vec(std::initializer_list<double> v) {
  mcx::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace fixtures
