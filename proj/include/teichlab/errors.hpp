#pragma once

#include <stdexcept>
#include <string>

namespace teichlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// argument outside the domain of arccosh or of a geometric construction
struct DomainError : Error {
  using Error::Error;
};

// a direct-path intermediate left the range of the scalar type
struct OverflowError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

// an internal invariant failed at runtime (monotonicity, pruning, bookkeeping)
struct InvariantError : Error {
  using Error::Error;
};

struct ConditionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

}  // namespace teichlab
