#pragma once

#include <stdexcept>
#include <string>

namespace bsvie {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition on numeric input does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (unknown names, out-of-range knobs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A requested allocation would exceed the configured memory budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Normal equations are rank deficient and no ridge was requested.
class NumericalRankError : public Error {
 public:
  using Error::Error;
};

/// An object was used outside its contract (domain mismatch, undeclared feature access).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Solver mode and driver are incompatible.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values in user supplied data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A fixed-point or Picard iteration stopped contracting.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsvie
