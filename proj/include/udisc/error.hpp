#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace udisc {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFiniteInput,
  EmptyInput,
  ParseError,
  LabelNotNumeric,
  EmptyFile,
  AllMissingColumn,
  NotAPermutation,
  DuplicateAttribute,
  UnknownAttribute,
  KindMismatch,
  SingularSystem,
  NoTextAttributes,
  DivergedLoss,
  NoNumericAttributes,
  NeedTwoObjectives,
  KMismatch,
  SchemaMismatch,
  UnsupportedVersion,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Numeric failures map to exit code 2 in the CLI; everything else is a user/input error.
constexpr bool is_numeric_failure(ErrorCode code) {
  return code == ErrorCode::SingularSystem || code == ErrorCode::DivergedLoss;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace udisc
