#pragma once

#include <stdexcept>
#include <string>

namespace atosync {

// Error taxonomy. The CLI maps each family onto a distinct exit code.

class InvalidParameters : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Empty or malformed data handed to an operation (as opposed to a bad model parameter).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Traffic intensity >= 1: no stationary backlog distribution exists.
class InstabilityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation would exceed a safety cap on state-space size.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Selects between the OpenMP kernels and the serial reference path.
enum class Execution { serial, parallel };

}  // namespace atosync
