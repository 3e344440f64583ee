#pragma once

#include <stdexcept>
#include <string>

#include "permchol/types.hpp"

namespace permchol {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-range parameters, non-finite inputs.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (CSV ingestion, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A factorization hit a non-positive pivot.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// An estimate that must be invertible is singular.
class SingularEstimateError : public Error {
 public:
  using Error::Error;
};

/// An estimator could not produce any usable result.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Coordinate descent ran out of sweeps. Carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Vector last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}

  const Vector& last_iterate() const noexcept { return last_iterate_; }

 private:
  Vector last_iterate_;
};

}  // namespace permchol
