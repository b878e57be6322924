#pragma once

#include <stdexcept>
#include <string>

namespace melada {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf, or was handed a non-finite input.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A precondition on arguments or configuration was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed (bad magic, truncation, inconsistent dimensions).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace melada
