#pragma once

#include <stdexcept>
#include <string>

namespace dsvr {

// Root of the library's exception hierarchy. The CLI maps each subclass to a
// distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data: unreadable frames, inconsistent sizes, out-of-range values.
class DataError : public Error {
 public:
  using Error::Error;
};

// Tensor or frame dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed, corrupted or version-mismatched bitstream.
class ContainerError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or other unrecoverable optimisation failure.
class TrainError : public Error {
 public:
  using Error::Error;
};

}  // namespace dsvr
