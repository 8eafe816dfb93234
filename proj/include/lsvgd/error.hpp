#pragma once

#include <stdexcept>
#include <string>

namespace lsvgd {

/// Malformed arguments: shape mismatches, empty sets, out-of-range parameters.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Median pairwise distance is exactly zero, so no bandwidth exists.
class DegenerateBandwidth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite intermediate values or a failed linear solve.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward model evaluated at a point where it is undefined.
class SingularInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Diffusion coefficient is non-positive somewhere on the grid.
class InvalidCoefficient : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace detail
}  // namespace lsvgd
