#pragma once

#include <stdexcept>
#include <string>

namespace seforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not match what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in a state that does not allow it
/// (stepping a finished episode, backward without a forward trace, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared where only finite values are allowed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace seforge
