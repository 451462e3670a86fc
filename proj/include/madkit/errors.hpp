#pragma once

#include <stdexcept>
#include <string>

namespace madkit {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Estimator applied to a sample with no observations.
class EmptySampleError : public std::invalid_argument {
 public:
  EmptySampleError() : std::invalid_argument("sample is empty") {}
};

/// Sample has fewer observations than the operation needs.
class SampleTooSmallError : public std::invalid_argument {
 public:
  SampleTooSmallError(std::size_t n, std::size_t required)
      : std::invalid_argument("sample size " + std::to_string(n) +
                              " is below the required minimum of " +
                              std::to_string(required)) {}
};

/// A factor scheme was queried outside the sample sizes it covers.
class OutOfDomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid simulation or distribution configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares fit without enough distinct points.
class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A report failed one of its internal consistency checks.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace madkit
