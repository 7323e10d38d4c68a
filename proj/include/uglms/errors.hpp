#pragma once

#include <stdexcept>
#include <string>

namespace uglms {

/// Innovation variance (or another quadratic form that must be positive)
/// collapsed to zero or below. The run cannot continue.
class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge vector with no span (first edge == last edge).
class DegenerateDevice : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Device whose code edges are not strictly increasing.
class NonMonotoneDevice : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace uglms
