#pragma once

#include <stdexcept>
#include <string>

namespace oscgap {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: dimension mismatches, violated preconditions, malformed literals.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Scenario files and scenario-level hypotheses (CLI exit code 2).
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-convergence, residual checks (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace oscgap
