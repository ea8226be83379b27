#pragma once

#include <stdexcept>
#include <string>

namespace levyrmt {

// Bad input or configuration. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation could not complete (non-convergence, degenerate data,
// resource budget). Maps to CLI exit code 2.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace levyrmt
