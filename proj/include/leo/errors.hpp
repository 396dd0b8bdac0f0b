#pragma once

#include <stdexcept>
#include <string>

namespace leo {

// Base for all errors raised by the library. Each subclass maps to one
// failure category so callers and tests can catch precisely.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor dimension mismatch; message names both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Mathematically invalid input (all-masked softmax, unnormalized
// probabilities, log of a non-positive value).
struct DomainError : Error {
  using Error::Error;
};

// API misuse: non-scalar loss, action not among candidates, tensors from
// different tapes, non-deterministic closure where determinism is required.
struct ContractError : Error {
  using Error::Error;
};

// Unknown node id, token id out of range, missing checkpoint tensor.
struct LookupError : Error {
  using Error::Error;
};

// Invalid or contradictory configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Bad input data (expert action not navigable, malformed dataset record).
struct DataError : Error {
  using Error::Error;
};

// Corrupt or incompatible serialized artifact (checkpoint, world file).
struct FormatError : Error {
  using Error::Error;
};

// Aggregation arity does not match the trained arity (concat scheme).
struct ArityError : Error {
  using Error::Error;
};

// Rejection sampling exhausted its retry budget.
struct SamplingError : Error {
  using Error::Error;
};

// Training diverged (NaN/Inf loss).
struct DivergenceError : Error {
  using Error::Error;
};

// Command-line misuse; message carries a remediation hint.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace leo
