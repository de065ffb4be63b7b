#include "usemetrics/core.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace usemetrics {

namespace {

constexpr const char* kAbstractToken = "abstract_view";
constexpr const char* kFullTextToken = "fulltext_download";
constexpr const char* kTocToken = "toc_browse";
constexpr const char* kSearchToken = "search";
constexpr const char* kCitationToken = "citation_follow";

bool contains_field_breakers(const std::string& s) {
  return s.find('\t') != std::string::npos || s.find('\n') != std::string::npos ||
         s.find('\r') != std::string::npos;
}

}  // namespace

std::string RequestType::token() const {
  switch (kind) {
    case RequestKind::AbstractView: return kAbstractToken;
    case RequestKind::FullTextDownload: return kFullTextToken;
    case RequestKind::TocBrowse: return kTocToken;
    case RequestKind::Search: return kSearchToken;
    case RequestKind::CitationFollow: return kCitationToken;
    case RequestKind::Other: return label;
  }
  return label;
}

RequestType RequestType::from_token(const std::string& token) {
  if (token == kAbstractToken) return abstract_view();
  if (token == kFullTextToken) return fulltext_download();
  if (token == kTocToken) return toc_browse();
  if (token == kSearchToken) return search();
  if (token == kCitationToken) return citation_follow();
  return other(token);
}

void sort_events(std::vector<UsageEvent>& events) {
  std::stable_sort(events.begin(), events.end(), event_order_lt);
}

bool Catalog::knows_journal(const std::string& journal_id) const {
  if (journals.count(journal_id) > 0) return true;
  for (const auto& [id, res] : resources)
    if (res.journal_id == journal_id) return true;
  return false;
}

ValidationReport validate_event(const UsageEvent& e) {
  ValidationReport report;
  if (e.event_id.empty()) report.violations.push_back("missing event_id");
  if (e.resource_id.empty()) report.violations.push_back("missing resource_id");
  if (e.request_type.kind == RequestKind::Other && e.request_type.label.empty())
    report.violations.push_back("Other request type with empty label");
  if (e.request_type.kind != RequestKind::Other && !e.request_type.label.empty())
    report.violations.push_back("canonical request type carries a label");
  for (const std::string* field :
       {&e.event_id, &e.session_id, &e.user_id, &e.resource_id,
        &e.request_type.label}) {
    if (contains_field_breakers(*field)) {
      report.violations.push_back("field contains tab or newline");
      break;
    }
  }
  return report;
}

ValidationReport EventValidator::validate(const UsageEvent& e) {
  ValidationReport report = validate_event(e);
  if (!e.event_id.empty() && !seen_ids_.insert(e.event_id).second)
    report.violations.push_back("duplicate event_id: " + e.event_id);
  return report;
}

std::string to_record(const UsageEvent& e) {
  std::string line;
  line.reserve(96);
  auto field = [&line](const std::string& s) {
    line += s.empty() ? "-" : s;
    line += '\t';
  };
  field(e.event_id);
  field(e.session_id);
  field(e.user_id);
  field(e.request_type.token());
  field(e.resource_id);
  line += format_iso8601(e.timestamp);
  return line;
}

UsageEvent parse_record(const std::string& line) {
  std::array<std::string, 6> fields;
  std::size_t start = 0;
  std::size_t n = 0;
  while (n < 5) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos)
      throw Error(ErrorCode::MalformedLine,
                  "event record has fewer than 6 fields: '" + line + "'");
    fields[n++] = line.substr(start, tab - start);
    start = tab + 1;
  }
  if (line.find('\t', start) != std::string::npos)
    throw Error(ErrorCode::MalformedLine,
                "event record has more than 6 fields: '" + line + "'");
  fields[5] = line.substr(start);

  auto unfield = [](const std::string& s) -> std::string {
    return s == "-" ? "" : s;
  };
  UsageEvent e;
  e.event_id = unfield(fields[0]);
  e.session_id = unfield(fields[1]);
  e.user_id = unfield(fields[2]);
  std::string type_token = unfield(fields[3]);
  if (e.event_id.empty())
    throw Error(ErrorCode::MalformedLine, "event record missing event_id");
  if (type_token.empty())
    throw Error(ErrorCode::MalformedLine, "event record missing request_type");
  e.request_type = RequestType::from_token(type_token);
  e.resource_id = unfield(fields[4]);
  if (e.resource_id.empty())
    throw Error(ErrorCode::MalformedLine, "event record missing resource_id");
  e.timestamp = parse_iso8601(fields[5]);
  return e;
}

void write_records(std::ostream& out, const std::vector<UsageEvent>& events) {
  for (const UsageEvent& e : events) out << to_record(e) << '\n';
}

std::vector<UsageEvent> read_records(std::istream& in) {
  std::vector<UsageEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    events.push_back(parse_record(line));
  }
  return events;
}

}  // namespace usemetrics
