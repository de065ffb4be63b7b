#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "usemetrics/core.hpp"

namespace usemetrics {

// ---------------------------------------------------------------------------
// Apache CLF

struct RawClfRecord {
  std::string client_ip;
  std::string auth_user;       // empty means '-'
  std::int64_t timestamp = 0;  // UTC
  std::string request_line;    // "METHOD PATH PROTOCOL"
  int status = 0;
  std::int64_t bytes = 0;
  std::string referrer;    // empty means '-' or absent
  std::string user_agent;  // empty means '-' or absent

  // The three request_line parts (validated at parse time).
  std::string method() const;
  std::string path() const;
};

// Parses one CLF line (common or combined format). Throws
// Error(MalformedLine) with the failing character position in the message.
RawClfRecord parse_clf(const std::string& line);

struct ClfFileResult {
  std::vector<RawClfRecord> records;
  std::size_t malformed_count = 0;
  // (line number, reason) for the first malformed lines, capped.
  std::vector<std::pair<std::size_t, std::string>> malformed_samples;
};

// Reads a CLF file (plain or gzip); malformed lines are skipped and counted,
// never abort the file.
ClfFileResult parse_clf_file(const std::string& path);
ClfFileResult parse_clf_lines(const std::vector<std::string>& lines);

// ---------------------------------------------------------------------------
// Route mapping CLF -> events

struct RouteRule {
  std::string pattern;  // literal path with exactly one "{id}" placeholder
  RequestType request_type;
};

struct ClfEventOptions {
  bool only_get_200 = true;  // count only status-200 GET requests as usage
  std::vector<std::string> agent_denylist;  // substring match, case-sensitive
  std::uint64_t seed = 0;                   // event ids derive from this
};

// Per-event sessionization key material carried alongside events.
struct KeySource {
  std::string client_ip;
  std::string user_agent;
  std::string auth_user;
};

struct ClfEvents {
  std::vector<UsageEvent> events;  // session_id empty
  std::vector<KeySource> sources;  // parallel to events
  std::size_t dropped = 0;         // unmatched, filtered, or denied records
};

// Throws Error(InvalidRouteMap) when a pattern is unparseable or the map is
// empty. Query strings are stripped before matching.
ClfEvents clf_to_events(const std::vector<RawClfRecord>& records,
                        const std::vector<RouteRule>& route_map,
                        const ClfEventOptions& options);

// ---------------------------------------------------------------------------
// Sessionization

struct SessionizationPolicy {
  std::int64_t inactivity_timeout = 30 * 60;  // seconds
  // Key fields drawn from {client_ip, user_agent, auth_user}.
  std::vector<std::string> key_fields = {"client_ip", "user_agent"};
  std::int64_t max_session_length = 24 * 3600;  // seconds

  bool valid() const {
    return inactivity_timeout > 0 && !key_fields.empty() &&
           max_session_length > 0;
  }
};

std::vector<std::string> make_session_keys(const std::vector<KeySource>& sources,
                                           const std::vector<std::string>& key_fields);

// Assigns session ids. keys[i] is the key tuple of events[i] (pre-joined to
// one string). Events must be time-ordered within each key; throws
// Error(UnsortedInput) otherwise. Ids are deterministic given input order
// and seed, and never shared across distinct keys.
std::vector<UsageEvent> sessionize(const std::vector<UsageEvent>& events,
                                   const std::vector<std::string>& keys,
                                   const SessionizationPolicy& policy,
                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// OpenURL ContextObjects

struct ContextObjectEvent {
  std::string referent;   // never empty on a valid object
  std::string requester;  // may be empty
  std::string service_type;
  std::string referring_entity;
  std::string resolver;
  std::string referrer;
  std::int64_t timestamp = 0;
  std::string event_uuid;
};

struct ContextObjectResult {
  std::vector<ContextObjectEvent> events;
  // Per-object isolation notes (e.g. a missing referent); parsing continues.
  std::vector<std::string> warnings;
};

// Throws Error(XmlError) with a line number on malformed XML;
// objects missing a referent are skipped with a MissingReferent warning.
ContextObjectResult parse_context_objects(const std::string& document);

std::string write_context_objects(const std::vector<ContextObjectEvent>& events);

// Fixed field mapping: referent -> resource_id, requester -> user_id,
// service_type -> request type label, event_uuid -> event_id.
UsageEvent context_to_usage(const ContextObjectEvent& e);

// ---------------------------------------------------------------------------
// COUNTER JR1

struct JournalMonthlyUsage {
  std::string journal_title;
  std::string publisher;
  std::string platform;
  std::string print_issn;
  std::string online_issn;
  std::array<std::int64_t, 12> months{};
  std::int64_t ytd = 0;
};

struct Jr1ParseResult {
  std::vector<JournalMonthlyUsage> rows;
  // YtdInconsistent and empty-cell notes; rows are still returned.
  std::vector<std::string> warnings;
};

// Throws Error(ColumnMismatch) when the header or a row does not have the
// 18 JR1 columns. Empty month cells become 0 with a warning.
Jr1ParseResult parse_counter_jr1(const std::string& csv);

// ---------------------------------------------------------------------------
// Event filtering (sample-effect controls)

// Applies the filter spec as a conjunction: MinMonthlyRequests keeps events
// whose user (or session, when user_id is empty) has at least n events in
// that event's UTC calendar month, counted over the input set. Events with
// neither key fail an active MinMonthlyRequests filter.
std::vector<UsageEvent> filter_events(const std::vector<UsageEvent>& events,
                                      const UserFilter& spec);

}  // namespace usemetrics
