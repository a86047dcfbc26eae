#pragma once

#include <stdexcept>
#include <string>

namespace veritas {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, manifests, feature artifacts).
class DataError : public Error {
 public:
  using Error::Error;
};

// Shapes or dimensions that do not agree between two arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Training data that cannot support the requested model (single class,
// identical rows, too few samples).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// A learned object saw data from a held-out identity.
class LeakageError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace veritas
