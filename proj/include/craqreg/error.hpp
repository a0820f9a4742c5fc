#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace craqreg {

enum class ErrorKind {
  DegeneratePoint,
  DegenerateConfiguration,
  DegenerateHomography,
  EmptyDetection,
  NoMatches,
  EstimationFailed,
  InvalidPolicy,
  DimensionMismatch,
  AlphaOutOfRange,
  EmptyErrorList,
  EmptyDataset,
  InvalidConfig,
  InvalidInput,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure so
/// callers (CLI exit codes, HTTP status, job records) can map it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised for configuration invariant violations; carries the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorKind::InvalidConfig, message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace craqreg
