#pragma once

#include <stdexcept>
#include <string>

namespace phasecert {

/// Violated precondition on a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (CSV rows, config files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phasecert
