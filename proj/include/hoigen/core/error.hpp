#pragma once

#include <stdexcept>
#include <string>

namespace hoigen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (shapes, ranges, invariants).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A 6-DOF rotation could not be orthonormalized.
class DegenerateRotationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Malformed, truncated or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training or sampling (non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hoigen
