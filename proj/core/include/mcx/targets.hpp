#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "mcx/core.hpp"

namespace mcx {

/// Unnormalized log-density over R^d with an optional analytic gradient and
/// optional analytic moments. Immutable after construction; copies share
/// the underlying callables, so one instance can serve many chains.
class TargetDensity {
 public:
  using LogDensityFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  TargetDensity(std::string name, std::size_t dim, LogDensityFn log_density,
                GradientFn gradient = {});

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }

  double log_density(const Vector& x) const { return log_density_(x); }
  bool has_gradient() const { return static_cast<bool>(gradient_); }
  Vector gradient(const Vector& x) const;

  // Counted variants used by the samplers.
  double log_density(const Vector& x, EvalCounters& counters) const {
    ++counters.target;
    return log_density_(x);
  }
  Vector gradient(const Vector& x, EvalCounters& counters) const {
    ++counters.grad;
    return gradient(x);
  }

  const std::optional<Vector>& analytic_mean() const { return mean_; }
  const std::optional<Matrix>& analytic_cov() const { return cov_; }
  bool fcd_support() const { return fcd_support_; }

  /// Box on which the log-density is finite and well-conditioned; used for
  /// gradient spot checks and overdispersed initialization.
  const Vector& box_lower() const { return box_lower_; }
  const Vector& box_upper() const { return box_upper_; }

  TargetDensity& with_moments(std::optional<Vector> mean, std::optional<Matrix> cov);
  TargetDensity& with_fcd_support(bool supported);
  TargetDensity& with_box(Vector lower, Vector upper);

 private:
  std::string name_;
  std::size_t dim_;
  LogDensityFn log_density_;
  GradientFn gradient_;
  std::optional<Vector> mean_;
  std::optional<Matrix> cov_;
  bool fcd_support_ = false;
  Vector box_lower_;
  Vector box_upper_;
};

TargetDensity make_standard_gaussian(std::size_t dim);

/// Zero-mean Gaussian with Sigma_ij = rho^|i-j|, evaluated through its
/// tridiagonal precision matrix.
TargetDensity make_ar1_gaussian(std::size_t dim, double rho);

/// Dense precision of the AR(1) covariance; used as a reference path.
Matrix ar1_covariance(std::size_t dim, double rho);

/// Hierarchical funnel over (v, x_1..x_{d-1}): v ~ N(0, 9), x_i | v ~ N(0, e^v).
TargetDensity make_funnel(std::size_t dim);

/// Curved ridge: log pi(x, y) = -(1 - x)^2 / 2 - 100 (y - x^2)^2 / 20.
TargetDensity make_banana();

/// Two unit-covariance Gaussians at -mu and +mu, mu = (separation / 2) e_1,
/// with weights `weight` and 1 - `weight`.
struct BimodalMixture {
  std::size_t dim;
  double separation;
  double weight;

  Vector mode() const;  // +mu
  double log_density(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  /// Posterior component probabilities (first: -mu component, second: +mu).
  std::pair<double, double> responsibilities(const Vector& x) const;
};

TargetDensity make_bimodal_mixture(std::size_t dim, double separation, double weight);

/// Zero log-density and zero gradient everywhere (free particle); test fixture.
TargetDensity make_flat(std::size_t dim);

/// Wraps `target` so every density and gradient evaluation busy-waits for
/// `delay_us` microseconds, emulating an expensive simulator likelihood.
TargetDensity make_expensive(const TargetDensity& target, double delay_us);

/// Named construction from the experiment config.
struct TargetSpec {
  std::string name;
  std::map<std::string, double> params;
};

TargetDensity make_target(const TargetSpec& spec);

/// Central-difference gradient check. Returns max_i |fd_i - grad_i| / max(1, |grad_i|).
/// Throws StencilError naming the coordinate whose stencil hits a non-finite density.
double fd_gradient_check(const TargetDensity& target, const Vector& x, double h);

}  // namespace mcx
