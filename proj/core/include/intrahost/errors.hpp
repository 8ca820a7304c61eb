#pragma once

#include <stdexcept>
#include <string>

namespace intrahost {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NoRootInBracket : Error {
  using Error::Error;
};

struct SingularMatrix : Error {
  using Error::Error;
};

/// Requested endemic quantity does not exist; carries the threshold that
/// ruled it out (t0 <= 1).
struct NoEndemicEquilibrium : Error {
  double t0;
  NoEndemicEquilibrium(double t0_value, const std::string& msg)
      : Error(msg), t0(t0_value) {}
};

struct DomainError : Error {
  using Error::Error;
};

struct UnsupportedRecruitment : Error {
  using Error::Error;
};

struct NotGeneric : Error {
  using Error::Error;
};

struct WrongModelShape : Error {
  using Error::Error;
};

struct StepSizeUnderflow : Error {
  using Error::Error;
};

struct NonFiniteState : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

/// Scenario file is syntactically malformed or violates the schema.
struct ParseError : Error {
  using Error::Error;
};

/// Scenario file parsed but describes an invalid model or bad options.
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace intrahost
