#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "support/helpers.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/ingest.hpp"
#include "usemetrics/rng.hpp"
#include "usemetrics/time_utils.hpp"

using namespace usemetrics;
using testutil::code_of;

namespace {

ContextObjectEvent sample(std::mt19937_64& rng, const std::string& referent) {
  ContextObjectEvent e;
  e.referent = referent;
  e.requester = "urn:ip:10.0.0.8";
  e.service_type = "fulltext_download";
  e.referring_entity = "info:sid/example";
  e.resolver = "resolver.example.edu";
  e.referrer = "gateway.example.org";
  e.timestamp = parse_iso8601("2005-04-02T08:15:00Z");
  e.event_uuid = uuid_from(rng);
  return e;
}

}  // namespace

TEST_CASE("context objects round-trip through XML") {
  std::mt19937_64 rng(5);
  std::vector<ContextObjectEvent> events = {
      sample(rng, "info:doi/10.1000/1"), sample(rng, "info:doi/10.1000/2")};
  events[1].requester.clear();
  events[1].service_type = "abstract_view";

  ContextObjectResult parsed =
      parse_context_objects(write_context_objects(events));
  CHECK(parsed.warnings.empty());
  REQUIRE(parsed.events.size() == 2);
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(parsed.events[i].referent == events[i].referent);
    CHECK(parsed.events[i].requester == events[i].requester);
    CHECK(parsed.events[i].service_type == events[i].service_type);
    CHECK(parsed.events[i].referring_entity == events[i].referring_entity);
    CHECK(parsed.events[i].resolver == events[i].resolver);
    CHECK(parsed.events[i].referrer == events[i].referrer);
    CHECK(parsed.events[i].timestamp == events[i].timestamp);
    CHECK(parsed.events[i].event_uuid == events[i].event_uuid);
  }
}

TEST_CASE("xml escaping survives hostile field values") {
  std::mt19937_64 rng(6);
  ContextObjectEvent e = sample(rng, "info:doi/10.1000/a&b<c>\"d\"");
  e.referring_entity = "x < y && z";
  ContextObjectResult parsed =
      parse_context_objects(write_context_objects({e}));
  REQUIRE(parsed.events.size() == 1);
  CHECK(parsed.events[0].referent == e.referent);
  CHECK(parsed.events[0].referring_entity == e.referring_entity);
}

TEST_CASE("objects without a referent are skipped with a warning") {
  std::mt19937_64 rng(7);
  std::vector<ContextObjectEvent> events = {sample(rng, "info:doi/10.1000/1"),
                                            sample(rng, ""),
                                            sample(rng, "info:doi/10.1000/3")};
  ContextObjectResult parsed =
      parse_context_objects(write_context_objects(events));
  REQUIRE(parsed.events.size() == 2);
  CHECK(parsed.events[0].referent == "info:doi/10.1000/1");
  CHECK(parsed.events[1].referent == "info:doi/10.1000/3");
  REQUIRE(parsed.warnings.size() == 1);
  CHECK(parsed.warnings[0].find("MissingReferent") != std::string::npos);
  CHECK(parsed.warnings[0].find("2") != std::string::npos);
}

TEST_CASE("administrative attributes are required per object") {
  std::mt19937_64 rng(8);
  ContextObjectEvent good = sample(rng, "info:doi/10.1000/1");
  std::string doc = write_context_objects({good});

  std::string no_ts = doc;
  std::size_t at = no_ts.find(" timestamp=");
  std::size_t end = no_ts.find('"', no_ts.find('"', at) + 1);
  no_ts.erase(at, end + 1 - at);
  ContextObjectResult parsed = parse_context_objects(no_ts);
  CHECK(parsed.events.empty());
  REQUIRE(parsed.warnings.size() == 1);
  CHECK(parsed.warnings[0].find("timestamp") != std::string::npos);

  std::string bad_uuid = doc;
  bad_uuid.replace(bad_uuid.find(good.event_uuid), good.event_uuid.size(),
                   "not-a-uuid");
  parsed = parse_context_objects(bad_uuid);
  CHECK(parsed.events.empty());
  CHECK(parsed.warnings.size() == 1);
}

TEST_CASE("malformed XML fails with a line number") {
  auto xml_error_with_line = [](const std::string& doc) {
    try {
      parse_context_objects(doc);
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::XmlError &&
             std::string(e.what()).find("line") != std::string::npos;
    }
  };
  CHECK(xml_error_with_line("<context-objects>\n<context-object>\n"));
  CHECK(xml_error_with_line("<context-objects>\n  </mismatch>\n"));
  CHECK(xml_error_with_line("plain text"));
  CHECK(code_of([] { parse_context_objects("<wrong-root/>"); }) ==
        ErrorCode::XmlError);
}

TEST_CASE("context events map onto usage events") {
  std::mt19937_64 rng(9);
  ContextObjectEvent e = sample(rng, "info:doi/10.1000/42");
  UsageEvent u = context_to_usage(e);
  CHECK(u.event_id == e.event_uuid);
  CHECK(u.user_id == e.requester);
  CHECK(u.resource_id == e.referent);
  CHECK(u.request_type == RequestType::fulltext_download());
  CHECK(u.timestamp == e.timestamp);
  CHECK(u.session_id.empty());

  e.service_type = "linkout";
  CHECK(context_to_usage(e).request_type.kind == RequestKind::Other);
}
