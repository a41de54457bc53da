#include "mcx/design.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace mcx {

double radical_inverse(std::size_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

Vector halton_point(std::size_t index, std::size_t dim) {
  static constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                         43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101,
                                         103, 107, 109, 113, 127, 131};
  if (dim > std::size(kPrimes)) throw InputError("halton_point: dimension too large");
  Vector p(static_cast<Eigen::Index>(dim));
  for (std::size_t j = 0; j < dim; ++j) p(static_cast<Eigen::Index>(j)) = radical_inverse(index, kPrimes[j]);
  return p;
}

Matrix halton_design(const Vector& lower, const Vector& upper, std::size_t n) {
  const auto dim = static_cast<std::size_t>(lower.size());
  Matrix out(static_cast<Eigen::Index>(n), lower.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Vector u = halton_point(i + 1, dim);
    out.row(static_cast<Eigen::Index>(i)) =
        (lower.array() + u.array() * (upper - lower).array()).matrix().transpose();
  }
  return out;
}

Matrix grid_design(const Vector& lower, const Vector& upper, std::size_t n) {
  const auto dim = static_cast<std::size_t>(lower.size());
  std::size_t per_axis = 1;
  while (std::pow(static_cast<double>(per_axis + 1), static_cast<double>(dim)) <= static_cast<double>(n)) ++per_axis;
  std::size_t n_grid = 1;
  for (std::size_t j = 0; j < dim; ++j) n_grid *= per_axis;
  if (per_axis < 2) n_grid = 0;

  Matrix out(static_cast<Eigen::Index>(n), lower.size());
  for (std::size_t i = 0; i < n_grid; ++i) {
    std::size_t rem = i;
    for (std::size_t j = 0; j < dim; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double t = static_cast<double>(rem % per_axis) / static_cast<double>(per_axis - 1);
      out(static_cast<Eigen::Index>(i), jj) = lower(jj) + t * (upper(jj) - lower(jj));
      rem /= per_axis;
    }
  }
  // Halton top-up, skipping points that land on a grid node.
  const double tol = 1e-12 * std::max(1.0, (upper - lower).cwiseAbs().maxCoeff());
  std::size_t row = n_grid;
  for (std::size_t index = 1; row < n; ++index) {
    const Vector u = halton_point(index, dim);
    const Vector x = lower + u.cwiseProduct(upper - lower);
    bool clash = false;
    for (std::size_t i = 0; i < n_grid && !clash; ++i)
      clash = (out.row(static_cast<Eigen::Index>(i)).transpose() - x).cwiseAbs().maxCoeff() <= tol;
    if (!clash) out.row(static_cast<Eigen::Index>(row++)) = x.transpose();
  }
  return out;
}

}  // namespace mcx
