#include <random>

#include "usemetrics/ingest.hpp"
#include "usemetrics/io_utils.hpp"
#include "usemetrics/rng.hpp"

namespace usemetrics {

namespace {

constexpr std::size_t kMalformedSampleCap = 100;

struct Cursor {
  const std::string& line;
  std::size_t pos = 0;
};

[[noreturn]] void malformed_at(const Cursor& c, const std::string& reason) {
  throw Error(ErrorCode::MalformedLine,
              "position " + std::to_string(c.pos) + ": " + reason);
}

void skip_spaces(Cursor& c) {
  while (c.pos < c.line.size() && c.line[c.pos] == ' ') ++c.pos;
}

std::string take_token(Cursor& c, const char* what) {
  skip_spaces(c);
  std::size_t start = c.pos;
  while (c.pos < c.line.size() && c.line[c.pos] != ' ') ++c.pos;
  if (c.pos == start) malformed_at(c, std::string("missing ") + what);
  return c.line.substr(start, c.pos - start);
}

std::string take_bracketed(Cursor& c) {
  skip_spaces(c);
  if (c.pos >= c.line.size() || c.line[c.pos] != '[')
    malformed_at(c, "expected '[' before timestamp");
  ++c.pos;
  std::size_t start = c.pos;
  std::size_t close = c.line.find(']', start);
  if (close == std::string::npos) malformed_at(c, "unclosed '[' in timestamp");
  c.pos = close + 1;
  return c.line.substr(start, close - start);
}

std::string take_quoted(Cursor& c, const char* what) {
  skip_spaces(c);
  if (c.pos >= c.line.size() || c.line[c.pos] != '"')
    malformed_at(c, std::string("expected opening quote for ") + what);
  ++c.pos;
  std::string out;
  while (c.pos < c.line.size()) {
    char ch = c.line[c.pos];
    if (ch == '\\' && c.pos + 1 < c.line.size()) {
      char next = c.line[c.pos + 1];
      if (next == '"' || next == '\\') {
        out += next;
        c.pos += 2;
        continue;
      }
      out += ch;
      ++c.pos;
      continue;
    }
    if (ch == '"') {
      ++c.pos;
      return out;
    }
    out += ch;
    ++c.pos;
  }
  malformed_at(c, std::string("unbalanced quote in ") + what);
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (ch < '0' || ch > '9') return false;
  return true;
}

std::string strip_query(const std::string& path) {
  std::size_t cut = path.find_first_of("?#");
  return cut == std::string::npos ? path : path.substr(0, cut);
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Resource ids often arrive percent-encoded (DOIs with %2F); decode once.
std::string url_decode(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hex_value(s[i + 1]);
      int lo = hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

struct CompiledRoute {
  std::string prefix;
  std::string suffix;
  RequestType request_type;
};

std::vector<CompiledRoute> compile_routes(const std::vector<RouteRule>& rules) {
  if (rules.empty())
    throw Error(ErrorCode::InvalidRouteMap, "route map is empty");
  std::vector<CompiledRoute> compiled;
  compiled.reserve(rules.size());
  for (const RouteRule& rule : rules) {
    const std::string placeholder = "{id}";
    std::size_t at = rule.pattern.find(placeholder);
    if (at == std::string::npos)
      throw Error(ErrorCode::InvalidRouteMap,
                  "pattern lacks {id} placeholder: " + rule.pattern);
    if (rule.pattern.find(placeholder, at + 1) != std::string::npos)
      throw Error(ErrorCode::InvalidRouteMap,
                  "pattern has multiple {id} placeholders: " + rule.pattern);
    compiled.push_back({rule.pattern.substr(0, at),
                        rule.pattern.substr(at + placeholder.size()),
                        rule.request_type});
  }
  return compiled;
}

bool match_route(const CompiledRoute& r, const std::string& path,
                 std::string& id_out) {
  if (path.size() <= r.prefix.size() + r.suffix.size()) return false;
  if (path.compare(0, r.prefix.size(), r.prefix) != 0) return false;
  if (path.compare(path.size() - r.suffix.size(), r.suffix.size(), r.suffix) !=
      0)
    return false;
  id_out = url_decode(
      path.substr(r.prefix.size(), path.size() - r.prefix.size() - r.suffix.size()));
  return !id_out.empty();
}

}  // namespace

std::string RawClfRecord::method() const {
  std::size_t sp = request_line.find(' ');
  return request_line.substr(0, sp);
}

std::string RawClfRecord::path() const {
  std::size_t first = request_line.find(' ');
  std::size_t second = request_line.find(' ', first + 1);
  return request_line.substr(first + 1, second - first - 1);
}

RawClfRecord parse_clf(const std::string& line) {
  Cursor c{line};
  RawClfRecord rec;

  rec.client_ip = take_token(c, "client ip");
  take_token(c, "ident field");  // RFC 1413 ident, unused
  std::string auth = take_token(c, "auth user");
  rec.auth_user = auth == "-" ? "" : auth;

  rec.timestamp = parse_clf_timestamp(take_bracketed(c));

  rec.request_line = take_quoted(c, "request line");
  {
    // Exactly three whitespace-separated parts: method, path, protocol.
    int parts = 0;
    bool in_part = false;
    for (char ch : rec.request_line) {
      if (ch == ' ') {
        in_part = false;
      } else if (!in_part) {
        in_part = true;
        ++parts;
      }
    }
    if (parts != 3) malformed_at(c, "request line does not have 3 parts");
  }

  std::string status = take_token(c, "status");
  if (!all_digits(status) || status.size() != 3)
    malformed_at(c, "non-numeric status");
  rec.status = std::stoi(status);
  if (rec.status < 100 || rec.status > 599)
    malformed_at(c, "status out of range");

  std::string bytes = take_token(c, "bytes");
  if (bytes == "-") {
    rec.bytes = 0;
  } else if (all_digits(bytes)) {
    rec.bytes = std::stoll(bytes);
  } else {
    malformed_at(c, "non-numeric bytes field");
  }

  skip_spaces(c);
  if (c.pos < c.line.size()) {  // combined format: referrer + user agent
    std::string ref = take_quoted(c, "referrer");
    rec.referrer = ref == "-" ? "" : ref;
    std::string agent = take_quoted(c, "user agent");
    rec.user_agent = agent == "-" ? "" : agent;
    skip_spaces(c);
    if (c.pos < c.line.size()) malformed_at(c, "unexpected trailing content");
  }
  return rec;
}

ClfFileResult parse_clf_lines(const std::vector<std::string>& lines) {
  ClfFileResult result;
  result.records.reserve(lines.size());
  std::size_t line_no = 0;
  for (const std::string& line : lines) {
    ++line_no;
    if (line.empty()) continue;
    try {
      result.records.push_back(parse_clf(line));
    } catch (const Error& e) {
      ++result.malformed_count;
      if (result.malformed_samples.size() < kMalformedSampleCap)
        result.malformed_samples.emplace_back(line_no, e.what());
    }
  }
  return result;
}

ClfFileResult parse_clf_file(const std::string& path) {
  ClfFileResult result;
  std::size_t line_no = 0;
  for_each_line(path, [&](const std::string& line) {
    ++line_no;
    if (line.empty()) return;
    try {
      result.records.push_back(parse_clf(line));
    } catch (const Error& e) {
      ++result.malformed_count;
      if (result.malformed_samples.size() < kMalformedSampleCap)
        result.malformed_samples.emplace_back(line_no, e.what());
    }
  });
  return result;
}

ClfEvents clf_to_events(const std::vector<RawClfRecord>& records,
                        const std::vector<RouteRule>& route_map,
                        const ClfEventOptions& options) {
  std::vector<CompiledRoute> routes = compile_routes(route_map);
  std::mt19937_64 rng(derive_seed(options.seed, "clf_events"));

  ClfEvents out;
  out.events.reserve(records.size());
  out.sources.reserve(records.size());
  for (const RawClfRecord& rec : records) {
    if (options.only_get_200 && (rec.method() != "GET" || rec.status != 200)) {
      ++out.dropped;
      continue;
    }
    bool denied = false;
    for (const std::string& needle : options.agent_denylist) {
      if (!needle.empty() && rec.user_agent.find(needle) != std::string::npos) {
        denied = true;
        break;
      }
    }
    if (denied) {
      ++out.dropped;
      continue;
    }
    std::string path = strip_query(rec.path());
    std::string id;
    const CompiledRoute* hit = nullptr;
    for (const CompiledRoute& r : routes) {
      if (match_route(r, path, id)) {
        hit = &r;
        break;
      }
    }
    if (hit == nullptr) {
      ++out.dropped;
      continue;
    }
    UsageEvent e;
    e.event_id = uuid_from(rng);
    e.user_id = rec.auth_user;
    e.request_type = hit->request_type;
    e.resource_id = id;
    e.timestamp = rec.timestamp;
    out.events.push_back(std::move(e));
    out.sources.push_back({rec.client_ip, rec.user_agent, rec.auth_user});
  }
  return out;
}

}  // namespace usemetrics
