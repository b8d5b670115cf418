#pragma once

#include <stdexcept>
#include <string>

namespace momentlift {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (tolerance, positivity, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Incompatible vector, matrix or object dimensions.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Moment order exceeds the slice dimension (recovery needs d <= m).
class ThresholdError : public Error {
 public:
  using Error::Error;
};

/// The projection model is ill-posed, e.g. m >= n.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Deterministic quadrature is only available on SO(2) and SO(3).
class UnsupportedGroupError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace momentlift
