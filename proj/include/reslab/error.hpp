#pragma once

#include <stdexcept>
#include <string>

namespace reslab {

/// Base for all library errors. The CLI maps ConfigError to exit code 1 and
/// every other Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad parameters, malformed config, violated preconditions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system failure; the message carries the path.
class IoError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A numerical procedure failed (step underflow, non-finite samples, singular systems).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace reslab
