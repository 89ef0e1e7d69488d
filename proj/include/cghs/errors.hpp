#pragma once

#include <stdexcept>
#include <string>

namespace cghs {

/// Bad argument to a sampler primitive or generator (non-finite, out of range).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data or configuration that fails validation.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Data the samplers cannot handle, e.g. a column with no observed cell.
class UnsupportedData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization or eigendecomposition failure inside a sweep.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sampler state invariant was violated (latent bound, symmetry, ...).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cghs
