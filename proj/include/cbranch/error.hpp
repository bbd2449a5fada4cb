#pragma once

#include <stdexcept>
#include <string>

namespace cbranch {

/// Raised when an input violates a documented precondition (dimension
/// mismatch, negative weight, non-probability law, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation would exceed a numeric or combinatorial guard
/// (line-count overflow, enumeration blowup, population cap). The CLI maps
/// this to exit code 2.
class NumericGuard : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cbranch
