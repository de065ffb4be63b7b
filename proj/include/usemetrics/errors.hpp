#pragma once

#include <stdexcept>
#include <string>

namespace usemetrics {

// Every failure raised by the library carries one of these codes so that
// callers (and the CLI error report) can dispatch without parsing messages.
enum class ErrorCode {
  // ingest
  MalformedLine,
  InvalidRouteMap,
  UnsortedInput,
  XmlError,
  MissingReferent,
  ColumnMismatch,
  // aggregate
  UnknownReferent,
  EmptyDateRange,
  MissingJournalMetadata,
  UnknownAuthor,
  NonPositiveInput,
  DegenerateInput,
  // obsolescence
  InsufficientData,
  NegativeAge,
  MissingS0,
  MissingComponent,
  MissingPublicationDate,
  NonConvergence,
  // usage_graph
  MissingSession,
  MissingJournalMapping,
  EmptyTable,
  // net_metrics
  EmptyMatrix,
  ZeroMatrix,
  MissingEdge,
  UnnormalizedMatrix,
  // mapping
  LengthMismatch,
  KTooLarge,
  // synth / config / io
  InvalidSpec,
  InvalidConfig,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace usemetrics
