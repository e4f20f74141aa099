#pragma once

#include <stdexcept>
#include <string>

namespace natvol {

struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// A point failed a model invariant (off the hyperboloid, non-null ideal
// point, arccosh argument below 1, ...).
struct invalid_point_error : error {
  using error::error;
};

// Mismatched or unsupported dimensions (e.g. m < n for an embedding).
struct dimension_error : error {
  using error::error;
};

// Measure violates the barycenter admissibility condition (an atom of
// mass >= 1/2, possibly after coincidence merging).
struct inadmissible_measure_error : error {
  using error::error;
};

// Orbit/measure construction produced nothing to work with.
struct degenerate_measure_error : error {
  using error::error;
};

// An iterative solver failed to reach its tolerance.
struct convergence_error : error {
  double residual = 0.0;
  convergence_error(const std::string& msg, double res) : error(msg), residual(res) {}
};

// Enumeration exceeded its configured budget.
struct resource_error : error {
  using error::error;
};

// Bad input data (relator violations, malformed specs, non-homomorphisms).
struct validation_error : error {
  using error::error;
};

// The linear system of a slice differential is numerically singular.
struct degenerate_support_error : error {
  using error::error;
};

}  // namespace natvol
