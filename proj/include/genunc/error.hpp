#pragma once

#include <stdexcept>
#include <string>

namespace genunc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, malformed input files, bad CLI arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, divergence, degenerate statistics.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public NumericError {
 public:
  using NumericError::NumericError;
};

// A file was produced from different inputs than the caller expects.
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace genunc
