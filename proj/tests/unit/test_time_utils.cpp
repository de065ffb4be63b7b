#include <doctest.h>

#include "support/helpers.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/time_utils.hpp"

using namespace usemetrics;
using testutil::code_of;

TEST_CASE("civil day arithmetic round-trips") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(1970, 1, 2) == 1);
  CHECK(days_from_civil(1969, 12, 31) == -1);

  const int samples[][3] = {{2000, 2, 29}, {1999, 12, 31}, {2004, 2, 29},
                            {1900, 2, 28}, {2038, 1, 19},  {1850, 7, 4}};
  for (const auto& s : samples) {
    int y = 0, m = 0, d = 0;
    civil_from_days(days_from_civil(s[0], s[1], s[2]), y, m, d);
    CHECK(y == s[0]);
    CHECK(m == s[1]);
    CHECK(d == s[2]);
  }
}

TEST_CASE("civil validity follows the Gregorian rules") {
  CHECK(is_valid_civil({2000, 2, 29, 0, 0, 0}));   // 400-year leap
  CHECK_FALSE(is_valid_civil({1900, 2, 29, 0, 0, 0}));  // century non-leap
  CHECK_FALSE(is_valid_civil({2005, 4, 31, 0, 0, 0}));
  CHECK_FALSE(is_valid_civil({2005, 13, 1, 0, 0, 0}));
  CHECK_FALSE(is_valid_civil({2005, 1, 1, 24, 0, 0}));
}

TEST_CASE("iso date parsing and formatting") {
  CHECK(parse_iso_date("1970-01-01") == 0);
  CHECK(parse_iso_date("2005-01-01") == 1104537600);
  CHECK(format_iso_date(1104537600) == "2005-01-01");
  CHECK(code_of([] { parse_iso_date("2005-1-1"); }) ==
        ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_iso_date("2005-02-30"); }) ==
        ErrorCode::MalformedLine);
}

TEST_CASE("iso 8601 instants accept explicit offsets") {
  std::int64_t noon = parse_iso8601("2005-06-15T12:30:45Z");
  CHECK(noon == parse_iso_date("2005-06-15") + 12 * 3600 + 30 * 60 + 45);
  CHECK(parse_iso8601("2005-06-15T14:30:45+02:00") == noon);
  CHECK(parse_iso8601("2005-06-15T14:30:45+0200") == noon);
  CHECK(parse_iso8601("2005-06-15T11:00:45-01:30") == noon);
  CHECK(format_iso8601(noon) == "2005-06-15T12:30:45Z");
  CHECK(parse_iso8601(format_iso8601(noon)) == noon);

  CHECK(code_of([] { parse_iso8601("2005-06-15 12:30:45"); }) ==
        ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_iso8601("2005-06-15T12:30:45"); }) ==
        ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_iso8601("2005-06-15T25:00:00Z"); }) ==
        ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_iso8601("2005-06-15T12:30:45Zx"); }) ==
        ErrorCode::MalformedLine);
}

TEST_CASE("clf timestamps convert to UTC") {
  CHECK(parse_clf_timestamp("10/Oct/2000:13:55:36 -0700") ==
        parse_iso8601("2000-10-10T20:55:36Z"));
  CHECK(parse_clf_timestamp("01/Jan/2005:00:00:00 +0000") ==
        parse_iso_date("2005-01-01"));
  CHECK(parse_clf_timestamp("15/Jun/2005:23:30:00 +0530") ==
        parse_iso8601("2005-06-15T18:00:00Z"));
  CHECK(code_of([] { parse_clf_timestamp("10/Zzz/2000:13:55:36 -0700"); }) ==
        ErrorCode::MalformedLine);
  CHECK(code_of([] { parse_clf_timestamp("32/Oct/2000:13:55:36 -0700"); }) ==
        ErrorCode::MalformedLine);
}

TEST_CASE("month helpers agree with date parsing") {
  CHECK(month_start(2005, 3) == parse_iso_date("2005-03-01"));
  int year = 0, month = 0;
  year_month_of(parse_iso8601("2005-03-31T23:59:59Z"), year, month);
  CHECK(year == 2005);
  CHECK(month == 3);
  year_month_of(parse_iso8601("2005-04-01T00:00:00Z"), year, month);
  CHECK(month == 4);
}

TEST_CASE("years_between uses 365.25-day years") {
  std::int64_t start = parse_iso_date("2000-01-01");
  CHECK(years_between(start, start + static_cast<std::int64_t>(
                                         kSecondsPerYear)) ==
        doctest::Approx(1.0));
  CHECK(years_between(start, start) == 0.0);
  CHECK(years_between(start, start - 86400 * 365) < 0.0);
}
