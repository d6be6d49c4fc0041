#pragma once

#include <stdexcept>
#include <string>

namespace taskmix {

/// Base class for all taskmix errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: dimension mismatches, invalid hyperparameters,
/// malformed values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Filesystem and parsing failures; the message carries the path and,
/// for parse errors, the row/column location.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A numerical invariant was violated (non-finite objective, objective
/// decrease beyond tolerance, loss of positivity).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskmix
