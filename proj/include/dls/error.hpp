#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dls {

enum class ErrorCode {
  InvalidSchema,
  InvalidArgument,
  InvalidSubscription,
  TypeMismatch,
  EmptyRange,
  OutOfDomain,
  IndexOverflow,
  MalformedLabel,
  LabelSetOverflow,
  DomainError,
  UnknownConnection,
  NonEmptyTable,
  CyclicTopology,
  InvalidTopology,
  ParamsMismatch,
  UnknownClient,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported with this exception; code() identifies
// the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dls
