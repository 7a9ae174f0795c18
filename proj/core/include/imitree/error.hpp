#pragma once

#include <stdexcept>
#include <string>

namespace imitree {

/// Raised when a caller violates a documented precondition (bad shapes,
/// out-of-range configuration values, malformed input files).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numeric computation leaves the finite range or an external
/// resource fails mid-run.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imitree
