#pragma once

#include <stdexcept>
#include <string>

namespace elop {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct DeltaOutOfRange : Error {
  using Error::Error;
};

struct NotPositiveSemidefinite : Error {
  NotPositiveSemidefinite(const std::string& what, double most_negative)
      : Error(what), most_negative_eigenvalue(most_negative) {}
  double most_negative_eigenvalue;
};

struct CholeskyFailure : Error {
  using Error::Error;
};

struct SingularStructure : Error {
  using Error::Error;
};

struct InfeasibleConstraint : Error {
  using Error::Error;
};

// Carries a JSON dump of (q, c, beta, residual) so the CLI --debug flag can
// persist the failed problem.
struct QpFailure : Error {
  QpFailure(const std::string& what, std::string debug_json)
      : Error(what), debug(std::move(debug_json)) {}
  std::string debug;
};

struct EmptyPanel : Error {
  using Error::Error;
};

struct NegativeBeta : Error {
  using Error::Error;
};

struct DegenerateDesign : Error {
  using Error::Error;
};

struct TooManyBins : Error {
  using Error::Error;
};

struct TooFewPoints : Error {
  using Error::Error;
};

struct RankDeficientDesign : Error {
  using Error::Error;
};

struct TooFewRows : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct DatasetFormatError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace elop
