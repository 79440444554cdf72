#include "dls/error.hpp"

namespace dls {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSubscription: return "InvalidSubscription";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::IndexOverflow: return "IndexOverflow";
    case ErrorCode::MalformedLabel: return "MalformedLabel";
    case ErrorCode::LabelSetOverflow: return "LabelSetOverflow";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnknownConnection: return "UnknownConnection";
    case ErrorCode::NonEmptyTable: return "NonEmptyTable";
    case ErrorCode::CyclicTopology: return "CyclicTopology";
    case ErrorCode::InvalidTopology: return "InvalidTopology";
    case ErrorCode::ParamsMismatch: return "ParamsMismatch";
    case ErrorCode::UnknownClient: return "UnknownClient";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace dls
