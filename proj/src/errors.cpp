#include "usemetrics/errors.hpp"

namespace usemetrics {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::InvalidRouteMap: return "InvalidRouteMap";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::XmlError: return "XmlError";
    case ErrorCode::MissingReferent: return "MissingReferent";
    case ErrorCode::ColumnMismatch: return "ColumnMismatch";
    case ErrorCode::UnknownReferent: return "UnknownReferent";
    case ErrorCode::EmptyDateRange: return "EmptyDateRange";
    case ErrorCode::MissingJournalMetadata: return "MissingJournalMetadata";
    case ErrorCode::UnknownAuthor: return "UnknownAuthor";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NegativeAge: return "NegativeAge";
    case ErrorCode::MissingS0: return "MissingS0";
    case ErrorCode::MissingComponent: return "MissingComponent";
    case ErrorCode::MissingPublicationDate: return "MissingPublicationDate";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::MissingSession: return "MissingSession";
    case ErrorCode::MissingJournalMapping: return "MissingJournalMapping";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::MissingEdge: return "MissingEdge";
    case ErrorCode::UnnormalizedMatrix: return "UnnormalizedMatrix";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace usemetrics
