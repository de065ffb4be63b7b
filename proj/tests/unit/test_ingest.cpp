#include <doctest.h>
#include <zlib.h>

#include <filesystem>
#include <fstream>
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

const std::string kLine =
    "192.0.2.7 - alice [10/Oct/2005:13:55:36 -0700] "
    "\"GET /fulltext/a42?sid=3 HTTP/1.1\" 200 2326 "
    "\"http://ref.example/\" \"Mozilla/4.08 (X11)\"";

std::vector<RouteRule> routes() {
  return {{"/fulltext/{id}", RequestType::fulltext_download()},
          {"/abstract/{id}", RequestType::abstract_view()}};
}

}  // namespace

TEST_CASE("parse_clf reads combined format fields") {
  RawClfRecord rec = parse_clf(kLine);
  CHECK(rec.client_ip == "192.0.2.7");
  CHECK(rec.auth_user == "alice");
  CHECK(rec.timestamp == parse_iso8601("2005-10-10T20:55:36Z"));
  CHECK(rec.method() == "GET");
  CHECK(rec.path() == "/fulltext/a42?sid=3");
  CHECK(rec.status == 200);
  CHECK(rec.bytes == 2326);
  CHECK(rec.referrer == "http://ref.example/");
  CHECK(rec.user_agent == "Mozilla/4.08 (X11)");
}

TEST_CASE("parse_clf accepts common format and '-' placeholders") {
  RawClfRecord rec = parse_clf(
      "10.0.0.1 - - [01/Mar/2005:10:00:00 +0000] \"GET /a HTTP/1.0\" 304 -");
  CHECK(rec.auth_user.empty());
  CHECK(rec.referrer.empty());
  CHECK(rec.user_agent.empty());
  CHECK(rec.status == 304);
  CHECK(rec.bytes == 0);
}

TEST_CASE("parse_clf reports the failing position") {
  auto check_malformed = [](const std::string& line) {
    try {
      parse_clf(line);
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::MalformedLine &&
             std::string(e.what()).find("position") != std::string::npos;
    }
  };
  CHECK(check_malformed("not a log line"));
  CHECK(check_malformed("10.0.0.1 - - [01/Mar/2005:10:00:00 +0000 \"GET / "
                        "HTTP/1.0\" 200 1"));
  CHECK(check_malformed("10.0.0.1 - - [01/Mar/2005:10:00:00 +0000] \"GET /"));
  CHECK(check_malformed(
      "10.0.0.1 - - [01/Mar/2005:10:00:00 +0000] \"GET / HTTP/1.0\" teapot 1"));
}

TEST_CASE("parse_clf_lines isolates malformed lines") {
  std::vector<std::string> lines;
  for (int i = 0; i < 40; ++i) {
    if (i % 5 == 3)
      lines.push_back("garbage " + std::to_string(i));
    else
      lines.push_back(kLine);
  }
  ClfFileResult result = parse_clf_lines(lines);
  CHECK(result.records.size() == 32);
  CHECK(result.malformed_count == 8);
  REQUIRE_FALSE(result.malformed_samples.empty());
  CHECK(result.malformed_samples[0].first == 4);  // 1-based line numbers
}

TEST_CASE("parse_clf_file reads plain and gzip logs") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "usemetrics_clf_test";
  fs::create_directories(dir);

  fs::path plain = dir / "plain.log";
  {
    std::ofstream out(plain);
    out << kLine << "\n" << "broken\n" << kLine << "\n";
  }
  ClfFileResult from_plain = parse_clf_file(plain.string());
  CHECK(from_plain.records.size() == 2);
  CHECK(from_plain.malformed_count == 1);

  fs::path zipped = dir / "zipped.log.gz";
  {
    gzFile gz = gzopen(zipped.string().c_str(), "wb");
    REQUIRE(gz != nullptr);
    std::string payload = kLine + "\n" + kLine + "\n";
    gzwrite(gz, payload.data(), static_cast<unsigned>(payload.size()));
    gzclose(gz);
  }
  ClfFileResult from_gz = parse_clf_file(zipped.string());
  CHECK(from_gz.records.size() == 2);
  CHECK(from_gz.malformed_count == 0);

  CHECK(code_of([&] { parse_clf_file((dir / "absent.log").string()); }) ==
        ErrorCode::IoError);
  fs::remove_all(dir);
}

TEST_CASE("clf_to_events maps routes and accounts for drops") {
  std::vector<std::string> lines = {
      kLine,  // matches /fulltext/{id}, query stripped
      "10.0.0.2 - - [10/Oct/2005:14:00:00 +0000] \"GET /abstract/a9 "
      "HTTP/1.1\" 200 50 \"-\" \"agent\"",
      "10.0.0.2 - - [10/Oct/2005:14:00:10 +0000] \"POST /fulltext/a9 "
      "HTTP/1.1\" 200 50 \"-\" \"agent\"",  // not GET
      "10.0.0.2 - - [10/Oct/2005:14:00:20 +0000] \"GET /fulltext/a9 "
      "HTTP/1.1\" 404 50 \"-\" \"agent\"",  // not 200
      "10.0.0.2 - - [10/Oct/2005:14:00:30 +0000] \"GET /search "
      "HTTP/1.1\" 200 50 \"-\" \"agent\"",  // unmatched path
      "10.0.0.3 - - [10/Oct/2005:14:00:40 +0000] \"GET /fulltext/a7 "
      "HTTP/1.1\" 200 50 \"-\" \"SpiderBot/2.0\"",  // denied agent
  };
  ClfFileResult parsed = parse_clf_lines(lines);
  REQUIRE(parsed.records.size() == 6);

  ClfEventOptions options;
  options.agent_denylist = {"Bot"};
  options.seed = 11;
  ClfEvents out = clf_to_events(parsed.records, routes(), options);
  REQUIRE(out.events.size() == 2);
  CHECK(out.dropped == 4);
  CHECK(out.sources.size() == out.events.size());

  CHECK(out.events[0].resource_id == "a42");
  CHECK(out.events[0].request_type == RequestType::fulltext_download());
  CHECK(out.events[0].user_id == "alice");
  CHECK(out.events[1].resource_id == "a9");
  CHECK(out.events[1].request_type == RequestType::abstract_view());
  CHECK(out.sources[0].client_ip == "192.0.2.7");
  CHECK(out.sources[1].user_agent == "agent");
  for (const UsageEvent& e : out.events) CHECK(is_uuid_text(e.event_id));

  // Same seed, same ids; different seed, different ids.
  ClfEvents again = clf_to_events(parsed.records, routes(), options);
  CHECK(again.events[0].event_id == out.events[0].event_id);
  options.seed = 12;
  ClfEvents moved = clf_to_events(parsed.records, routes(), options);
  CHECK(moved.events[0].event_id != out.events[0].event_id);
}

TEST_CASE("clf_to_events validates the route map") {
  CHECK(code_of([] { clf_to_events({}, {}, {}); }) ==
        ErrorCode::InvalidRouteMap);
  CHECK(code_of([] {
          clf_to_events({}, {{"/fulltext/", RequestType::fulltext_download()}},
                        {});
        }) == ErrorCode::InvalidRouteMap);
}

TEST_CASE("filter_events combines its criteria as a conjunction") {
  std::int64_t jan = parse_iso_date("2005-01-10");
  std::int64_t feb = parse_iso_date("2005-02-10");
  std::vector<UsageEvent> events = {
      testutil::event("e1", "s1", "u1", "r1", jan),
      testutil::event("e2", "s1", "u1", "r1", jan + 60,
                      RequestType::abstract_view()),
      testutil::event("e3", "s2", "u1", "r1", feb),
      testutil::event("e4", "s3", "", "r1", feb),
      testutil::event("e5", "s3", "", "r1", feb + 60),
  };

  SUBCASE("full text only") {
    UserFilter spec;
    spec.full_text_only = true;
    std::vector<UsageEvent> kept = filter_events(events, spec);
    REQUIRE(kept.size() == 4);
    for (const UsageEvent& e : kept)
      CHECK(e.request_type == RequestType::fulltext_download());
  }

  SUBCASE("request type list") {
    UserFilter spec;
    spec.request_type_in = {{RequestType::abstract_view()}};
    std::vector<UsageEvent> kept = filter_events(events, spec);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].event_id == "e2");
  }

  SUBCASE("minimum monthly requests counts per actor and month") {
    UserFilter spec;
    spec.min_monthly_requests = 2;
    std::vector<UsageEvent> kept = filter_events(events, spec);
    // u1 has two January events but only one in February; the anonymous
    // session s3 has two February events.
    REQUIRE(kept.size() == 4);
    CHECK(kept[0].event_id == "e1");
    CHECK(kept[1].event_id == "e2");
    CHECK(kept[2].event_id == "e4");
    CHECK(kept[3].event_id == "e5");
  }

  SUBCASE("events with no actor fail an active monthly minimum") {
    UserFilter spec;
    spec.min_monthly_requests = 1;
    std::vector<UsageEvent> anonymous = {
        testutil::event("e9", "", "", "r1", jan)};
    CHECK(filter_events(anonymous, spec).empty());
  }

  SUBCASE("empty spec keeps everything") {
    CHECK(filter_events(events, UserFilter{}).size() == events.size());
  }
}
