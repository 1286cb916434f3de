#pragma once

#include <span>

#include "defersim/types.hpp"

namespace defersim {

// Scales nonnegative weights to unit mass. Throws DegenerateWeightsError when
// the total mass is zero (or any entry is negative/non-finite).
SimplexVector normalize(std::span<const double> weights);

// Euclidean projection onto the probability simplex (sorted-threshold method).
// Idempotent; inputs already on the simplex come back unchanged.
SimplexVector project_simplex(std::span<const double> v);

}  // namespace defersim
