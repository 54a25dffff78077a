#pragma once

#include <stdexcept>
#include <string>

namespace cndr {

// Error taxonomy. The CLI maps each family onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments to a library call (dimension mismatch, out-of-range parameter).
class InputError : public Error {
 public:
  using Error::Error;
};

// Unrecognized or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed data files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, failed convergence, degenerate kernels.
class NumericError : public Error {
 public:
  using Error::Error;
};

// The feasible set of mixture weights is empty, or a requested
// selection cannot be realized inside it.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace cndr
