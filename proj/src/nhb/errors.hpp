#pragma once

#include <stdexcept>
#include <string>

namespace nhb {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration input (bad key, failed cross-field constraint).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A position left the potential's domain O (U = +infinity there).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition (dimension mismatch, NaN input).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: overflow, stencil too close to a boundary,
/// integrator step failure after exhausting the boundary policy.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Control target lies outside the reachable set.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// No in-domain path found within the search budget; the distance
/// estimate is unavailable.
class UnreachableEstimateError : public Error {
 public:
  using Error::Error;
};

}  // namespace nhb
