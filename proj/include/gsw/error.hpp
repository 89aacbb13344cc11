#pragma once

#include <stdexcept>
#include <string>

namespace gsw {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (bad parameters, dimension mismatch, bad CSV).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The transport solver could not certify its solution.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A delta-method quantity was requested too close to the null.
class NullProximityError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsw
