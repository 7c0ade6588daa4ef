#pragma once

#include <stdexcept>
#include <string>

namespace upcc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (size mismatch, k > n, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: non-finite activation, loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Point file could not be parsed.
class MalformedPly : public Error {
 public:
  using Error::Error;
};

/// Checkpoint missing, unreadable, or built for a different architecture.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace upcc
