#pragma once

#include <stdexcept>
#include <string>

namespace thermadapt {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment, building or strategy configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data is too short, degenerate or otherwise unusable.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or unstable integration.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace thermadapt
