#pragma once

#include <stdexcept>
#include <string>

namespace gcilsm {

/// Base class of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation
/// (fusion exponent outside (0,1], K <= 0, unknown label, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: non-PD covariance, vanishing normalizer.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration rejected before any run starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcilsm
