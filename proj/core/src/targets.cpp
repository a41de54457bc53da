#include "mcx/targets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>


namespace mcx {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

double param(const TargetSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

std::size_t dim_param(const TargetSpec& spec, double fallback) {
  const double d = param(spec, "dim", fallback);
  require(d >= 0 && d == std::floor(d), "target '" + spec.name + "': dim must be a non-negative integer");
  return static_cast<std::size_t>(d);
}

void busy_wait(double delay_us) {
  if (delay_us <= 0) return;
  const auto until = std::chrono::steady_clock::now() +
                     std::chrono::nanoseconds(static_cast<std::int64_t>(delay_us * 1e3));
  while (std::chrono::steady_clock::now() < until) {
  }
}

}  // namespace

// ---- TargetDensity -------------------------------------------------------

TargetDensity::TargetDensity(std::string name, std::size_t dim, LogDensityFn log_density,
                             GradientFn gradient)
    : name_(std::move(name)),
      dim_(dim),
      log_density_(std::move(log_density)),
      gradient_(std::move(gradient)),
      box_lower_(Vector::Constant(static_cast<Eigen::Index>(dim), -3.0)),
      box_upper_(Vector::Constant(static_cast<Eigen::Index>(dim), 3.0)) {
  require(dim_ >= 1, "target dimension must be positive");
  require(static_cast<bool>(log_density_), "target requires a log-density");
}

Vector TargetDensity::gradient(const Vector& x) const {
  if (!gradient_) throw InputError("target '" + name_ + "' has no gradient");
  return gradient_(x);
}

TargetDensity& TargetDensity::with_moments(std::optional<Vector> mean, std::optional<Matrix> cov) {
  mean_ = std::move(mean);
  cov_ = std::move(cov);
  return *this;
}

TargetDensity& TargetDensity::with_fcd_support(bool supported) {
  fcd_support_ = supported;
  return *this;
}

TargetDensity& TargetDensity::with_box(Vector lower, Vector upper) {
  require(lower.size() == upper.size() && static_cast<std::size_t>(lower.size()) == dim_,
          "target box has the wrong dimension");
  box_lower_ = std::move(lower);
  box_upper_ = std::move(upper);
  return *this;
}

// ---- factories -----------------------------------------------------------

TargetDensity make_standard_gaussian(std::size_t dim) {
  require(dim >= 1, "standard_gaussian: d must be >= 1");
  const auto n = static_cast<Eigen::Index>(dim);
  TargetDensity t(
      "standard_gaussian", dim, [](const Vector& x) { return -0.5 * x.squaredNorm(); },
      [](const Vector& x) -> Vector { return -x; });
  t.with_moments(Vector::Zero(n), Matrix::Identity(n, n)).with_fcd_support(true);
  return t;
}

Matrix ar1_covariance(std::size_t dim, double rho) {
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cov(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return cov;
}

namespace {

// y = Q x for the AR(1) precision Q = (1 / (1 - rho^2)) * tridiag(-rho, 1 + rho^2, -rho)
// with the two corner diagonal entries equal to 1.
Vector ar1_precision_times(const Vector& x, double rho) {
  const Eigen::Index n = x.size();
  Vector y(n);
  if (n == 1) {
    y(0) = x(0);
    return y;
  }
  const double scale = 1.0 / (1.0 - rho * rho);
  const double interior = 1.0 + rho * rho;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double diag = (i == 0 || i == n - 1) ? 1.0 : interior;
    double v = diag * x(i);
    if (i > 0) v -= rho * x(i - 1);
    if (i + 1 < n) v -= rho * x(i + 1);
    y(i) = scale * v;
  }
  return y;
}

}  // namespace

TargetDensity make_ar1_gaussian(std::size_t dim, double rho) {
  require(dim >= 1, "ar1_gaussian: d must be >= 1");
  require(std::abs(rho) < 1.0, "ar1_gaussian: |rho| must be < 1");
  TargetDensity t(
      "ar1_gaussian", dim,
      [rho](const Vector& x) { return -0.5 * x.dot(ar1_precision_times(x, rho)); },
      [rho](const Vector& x) -> Vector { return -ar1_precision_times(x, rho); });
  t.with_moments(Vector::Zero(static_cast<Eigen::Index>(dim)), ar1_covariance(dim, rho))
      .with_fcd_support(true);
  return t;
}

TargetDensity make_funnel(std::size_t dim) {
  require(dim >= 2, "funnel: d must be >= 2");
  const double k = static_cast<double>(dim - 1);
  auto log_density = [k](const Vector& z) {
    const double v = z(0);
    const double ss = z.tail(z.size() - 1).squaredNorm();
    return -v * v / 18.0 - k * v / 2.0 - std::exp(-v) * ss / 2.0;
  };
  auto gradient = [k](const Vector& z) -> Vector {
    const double v = z(0);
    const double ev = std::exp(-v);
    Vector g(z.size());
    g(0) = -v / 9.0 - k / 2.0 + ev * z.tail(z.size() - 1).squaredNorm() / 2.0;
    g.tail(z.size() - 1) = -ev * z.tail(z.size() - 1);
    return g;
  };
  const auto n = static_cast<Eigen::Index>(dim);
  Vector var = Vector::Constant(n, std::exp(4.5));  // E[e^v] for v ~ N(0, 9)
  var(0) = 9.0;
  TargetDensity t("funnel", dim, log_density, gradient);
  t.with_moments(Vector::Zero(n), Matrix(var.asDiagonal()));
  return t;
}

TargetDensity make_banana() {
  auto log_density = [](const Vector& z) {
    const double a = 1.0 - z(0);
    const double b = z(1) - z(0) * z(0);
    return -a * a / 2.0 - 100.0 * b * b / 20.0;
  };
  auto gradient = [](const Vector& z) -> Vector {
    const double b = z(1) - z(0) * z(0);
    Vector g(2);
    g(0) = (1.0 - z(0)) + 20.0 * z(0) * b;
    g(1) = -10.0 * b;
    return g;
  };
  TargetDensity t("banana", 2, log_density, gradient);
  Vector lo(2), hi(2);
  lo << -2.0, -1.0;
  hi << 2.0, 3.0;
  t.with_box(lo, hi);
  return t;
}

Vector BimodalMixture::mode() const {
  Vector mu = Vector::Zero(static_cast<Eigen::Index>(dim));
  mu(0) = separation / 2.0;
  return mu;
}

namespace {
double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == kNegInf) return kNegInf;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace

std::pair<double, double> BimodalMixture::responsibilities(const Vector& x) const {
  const Vector mu = mode();
  const double la = std::log(weight) - 0.5 * (x + mu).squaredNorm();
  const double lb = std::log1p(-weight) - 0.5 * (x - mu).squaredNorm();
  const double lse = log_sum_exp(la, lb);
  return {std::exp(la - lse), std::exp(lb - lse)};
}

double BimodalMixture::log_density(const Vector& x) const {
  const Vector mu = mode();
  return log_sum_exp(std::log(weight) - 0.5 * (x + mu).squaredNorm(),
                     std::log1p(-weight) - 0.5 * (x - mu).squaredNorm());
}

Vector BimodalMixture::gradient(const Vector& x) const {
  const Vector mu = mode();
  const auto [ra, rb] = responsibilities(x);
  return -(ra * (x + mu) + rb * (x - mu));
}

TargetDensity make_bimodal_mixture(std::size_t dim, double separation, double weight) {
  require(dim >= 1, "bimodal_mixture: d must be >= 1");
  require(separation >= 0.0, "bimodal_mixture: separation must be >= 0");
  require(weight > 0.0 && weight < 1.0, "bimodal_mixture: weight must lie in (0, 1)");
  const BimodalMixture mix{dim, separation, weight};
  TargetDensity t(
      "bimodal_mixture", dim, [mix](const Vector& x) { return mix.log_density(x); },
      [mix](const Vector& x) { return mix.gradient(x); });
  const Vector mu = mix.mode();
  const auto n = static_cast<Eigen::Index>(dim);
  const Matrix cov = Matrix::Identity(n, n) + 4.0 * weight * (1.0 - weight) * mu * mu.transpose();
  t.with_moments((1.0 - 2.0 * weight) * mu, cov);
  Vector lo = Vector::Constant(n, -3.0), hi = Vector::Constant(n, 3.0);
  lo(0) = -separation / 2.0 - 3.0;
  hi(0) = separation / 2.0 + 3.0;
  t.with_box(lo, hi);
  return t;
}

TargetDensity make_flat(std::size_t dim) {
  require(dim >= 1, "flat: d must be >= 1");
  return TargetDensity(
      "flat", dim, [](const Vector&) { return 0.0; },
      [](const Vector& x) -> Vector { return Vector::Zero(x.size()); });
}

TargetDensity make_expensive(const TargetDensity& target, double delay_us) {
  require(delay_us >= 0.0, "expensive wrapper: delay must be >= 0");
  TargetDensity::GradientFn grad;
  if (target.has_gradient()) {
    grad = [target, delay_us](const Vector& x) {
      busy_wait(delay_us);
      return target.gradient(x);
    };
  }
  TargetDensity t(
      target.name(), target.dim(),
      [target, delay_us](const Vector& x) {
        busy_wait(delay_us);
        return target.log_density(x);
      },
      grad);
  t.with_moments(target.analytic_mean(), target.analytic_cov())
      .with_fcd_support(target.fcd_support())
      .with_box(target.box_lower(), target.box_upper());
  return t;
}

TargetDensity make_target(const TargetSpec& spec) {
  static const std::map<std::string, std::vector<std::string>> allowed{
      {"standard_gaussian", {"dim"}},
      {"ar1_gaussian", {"dim", "rho"}},
      {"funnel", {"dim"}},
      {"banana", {}},
      {"bimodal_mixture", {"dim", "separation", "weight"}},
      {"flat", {"dim"}}};
  const auto known = allowed.find(spec.name);
  if (known == allowed.end()) throw InputError("unknown target '" + spec.name + "'");
  for (const auto& [key, value] : spec.params) {
    const auto& names = known->second;
    if (key != "delay_us" && std::find(names.begin(), names.end(), key) == names.end()) {
      throw InputError("target '" + spec.name + "' has no parameter '" + key + "'");
    }
  }
  TargetDensity base = [&]() -> TargetDensity {
    if (spec.name == "standard_gaussian") return make_standard_gaussian(dim_param(spec, 2));
    if (spec.name == "ar1_gaussian") return make_ar1_gaussian(dim_param(spec, 2), param(spec, "rho", 0.9));
    if (spec.name == "funnel") return make_funnel(dim_param(spec, 10));
    if (spec.name == "banana") return make_banana();
    if (spec.name == "bimodal_mixture")
      return make_bimodal_mixture(dim_param(spec, 10), param(spec, "separation", 8.0),
                                  param(spec, "weight", 0.5));
    if (spec.name == "flat") return make_flat(dim_param(spec, 1));
    throw InputError("unknown target '" + spec.name + "'");
  }();
  const double delay = param(spec, "delay_us", 0.0);
  if (delay > 0.0) return make_expensive(base, delay);
  return base;
}

double fd_gradient_check(const TargetDensity& target, const Vector& x, double h) {
  require(target.has_gradient(), "fd_gradient_check: target has no gradient");
  require(static_cast<std::size_t>(x.size()) == target.dim(), "fd_gradient_check: wrong dimension");
  require(h > 0.0, "fd_gradient_check: h must be positive");
  const Vector grad = target.gradient(x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    const double fp = target.log_density(xp);
    const double fm = target.log_density(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw StencilError("non-finite log-density in the stencil of coordinate " + std::to_string(i),
                         static_cast<std::size_t>(i));
    }
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad(i)) / std::max(1.0, std::abs(grad(i))));
  }
  return worst;
}

}  // namespace mcx
