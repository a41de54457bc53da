#pragma once

#include <cstddef>

#include "mcx/core.hpp"

namespace mcx {

/// Radical-inverse (van der Corput) value of `index` in the given prime base.
double radical_inverse(std::size_t index, unsigned base);

/// Halton point `index` (1-based recommended, index 0 is the origin) in [0,1)^dim.
Vector halton_point(std::size_t index, std::size_t dim);

/// `n` quasi-random points (rows) filling the box [lower, upper].
Matrix halton_design(const Vector& lower, const Vector& upper, std::size_t n);

/// Training design for surrogates: the largest full tensor grid with at most
/// `n` nodes (boundary included), topped up with Halton points to exactly `n`.
Matrix grid_design(const Vector& lower, const Vector& upper, std::size_t n);

}  // namespace mcx
