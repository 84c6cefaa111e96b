#pragma once

#include <stdexcept>
#include <string>

namespace gtda {

/// Base of every error the library throws. The CLI maps the concrete
/// subclass onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad usage, malformed configuration, or violated preconditions on
/// parameters (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or inconsistent input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or evaluation (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gtda
