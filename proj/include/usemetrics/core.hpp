#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "usemetrics/errors.hpp"
#include "usemetrics/time_utils.hpp"

namespace usemetrics {

// ---------------------------------------------------------------------------
// Request types

enum class RequestKind {
  AbstractView,
  FullTextDownload,
  TocBrowse,
  Search,
  CitationFollow,
  Other,
};

// A request type is a closed kind plus a free-form label carried only by
// Other. Unknown verbs ingest as Other with the raw label preserved.
struct RequestType {
  RequestKind kind = RequestKind::Other;
  std::string label;  // empty unless kind == Other

  auto operator<=>(const RequestType&) const = default;
  bool operator==(const RequestType&) const = default;

  static RequestType abstract_view() { return {RequestKind::AbstractView, ""}; }
  static RequestType fulltext_download() {
    return {RequestKind::FullTextDownload, ""};
  }
  static RequestType toc_browse() { return {RequestKind::TocBrowse, ""}; }
  static RequestType search() { return {RequestKind::Search, ""}; }
  static RequestType citation_follow() {
    return {RequestKind::CitationFollow, ""};
  }
  static RequestType other(std::string raw_label) {
    return {RequestKind::Other, std::move(raw_label)};
  }

  // Token used in the canonical record format and in config files.
  // Canonical kinds map to fixed tokens; Other serializes its raw label.
  std::string token() const;
  // Never yields Other for a canonical token, so token round-trips are
  // identity for every parseable event.
  static RequestType from_token(const std::string& token);
};

// ---------------------------------------------------------------------------
// Events and resources

struct UsageEvent {
  std::string event_id;    // UUID text form, globally unique per collection
  std::string session_id;  // opaque; empty until sessionization
  std::string user_id;     // optional; empty means absent
  RequestType request_type;
  std::string resource_id;
  std::int64_t timestamp = 0;  // UTC epoch seconds

  bool operator==(const UsageEvent&) const = default;
};

// Total order used everywhere events must be sequenced deterministically.
inline bool event_order_lt(const UsageEvent& a, const UsageEvent& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.event_id < b.event_id;
}

void sort_events(std::vector<UsageEvent>& events);

struct Resource {
  std::string resource_id;
  std::string journal_id;
  std::int64_t publication_date = 0;  // midnight UTC of the calendar date
  int author_count = 1;
  std::string country;  // optional ISO code; empty means absent
  std::string title;    // optional
};

struct JournalInfo {
  std::string journal_id;
  std::string title;
  std::string publisher;
  std::string platform;
  std::string print_issn;
  std::string online_issn;
};

// Reference tables resolved once per run and shared read-only.
struct Catalog {
  std::map<std::string, Resource> resources;
  std::map<std::string, JournalInfo> journals;
  // author key -> resource ids (sorted, unique)
  std::map<std::string, std::vector<std::string>> author_articles;
  // user_id (preferred) or session_id -> ISO country code
  std::map<std::string, std::string> key_country;

  // A journal key is resolvable if it appears in the journal table or as
  // some resource's journal_id.
  bool knows_journal(const std::string& journal_id) const;
};

// ---------------------------------------------------------------------------
// Aggregation parameters

enum class Normalization { None, PerArticle, PerAuthor };

struct ResourceFilter {
  std::optional<std::string> journal_id;
  // Publication-date window [start, end), epoch seconds.
  std::optional<std::pair<std::int64_t, std::int64_t>> publication_window;
  std::optional<std::vector<std::string>> id_list;

  bool operator==(const ResourceFilter&) const = default;
};

struct UserFilter {
  std::optional<int> min_monthly_requests;
  bool full_text_only = false;
  std::optional<std::vector<RequestType>> request_type_in;

  bool operator==(const UserFilter&) const = default;
};

struct AggregationParams {
  std::int64_t date_start = 0;  // window [date_start, date_end)
  std::int64_t date_end = 0;
  std::optional<std::vector<RequestType>> request_type_filter;
  ResourceFilter resource_filter;
  UserFilter user_filter;
  Normalization normalization = Normalization::None;
  // Optional interest weights per request-type token; absent token weighs 1.
  std::map<std::string, double> type_weights;

  bool operator==(const AggregationParams&) const = default;
};

struct UsageStatistic {
  std::string referent;
  double value = 0.0;  // >= 0
  AggregationParams params;
  std::int64_t produced_at = 0;
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

// Stateless single-event checks.
ValidationReport validate_event(const UsageEvent& e);

// Batch validator that additionally flags duplicate event ids (the second
// and later occurrences get the violation).
class EventValidator {
 public:
  ValidationReport validate(const UsageEvent& e);

 private:
  std::unordered_set<std::string> seen_ids_;
};

// ---------------------------------------------------------------------------
// Canonical event record format
//
// One event per line, tab-separated fields in fixed order:
//   event_id  session_id  user_id  request_type  resource_id  timestamp
// Empty optional fields are encoded as "-"; the timestamp is ISO 8601 UTC.

std::string to_record(const UsageEvent& e);

// Throws Error(MalformedLine) on field-count, placeholder or timestamp
// violations.
UsageEvent parse_record(const std::string& line);

void write_records(std::ostream& out, const std::vector<UsageEvent>& events);
std::vector<UsageEvent> read_records(std::istream& in);

}  // namespace usemetrics
