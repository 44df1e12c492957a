#pragma once

#include <stdexcept>
#include <string>

namespace rumorbd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or parameter outside the documented domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration could not reach the requested tolerance.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double error_estimate)
      : Error(what), error_estimate_(error_estimate) {}

  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double error_estimate_;
};

/// Probability mass escaped a truncated state space beyond the allowed budget.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double leaked_mass)
      : Error(what), leaked_mass_(leaked_mass) {}

  double leaked_mass() const noexcept { return leaked_mass_; }

 private:
  double leaked_mass_;
};

/// Malformed or inconsistent input data (CSV, config).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace rumorbd
