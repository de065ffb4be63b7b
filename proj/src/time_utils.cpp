#include "usemetrics/time_utils.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>

#include "usemetrics/errors.hpp"

namespace usemetrics {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[static_cast<std::size_t>(m - 1)];
}

[[noreturn]] void malformed(const std::string& what, const std::string& text) {
  throw Error(ErrorCode::MalformedLine, what + ": '" + text + "'");
}

// Parses exactly n digits starting at text[pos]; advances pos.
int fixed_digits(const std::string& text, std::size_t& pos, int n,
                 const char* what) {
  if (pos + static_cast<std::size_t>(n) > text.size())
    malformed(std::string("truncated ") + what, text);
  int value = 0;
  for (int i = 0; i < n; ++i) {
    char c = text[pos + static_cast<std::size_t>(i)];
    if (c < '0' || c > '9') malformed(std::string("bad digit in ") + what, text);
    value = value * 10 + (c - '0');
  }
  pos += static_cast<std::size_t>(n);
  return value;
}

void expect_char(const std::string& text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c)
    malformed(std::string("expected '") + c + "'", text);
  ++pos;
}

}  // namespace

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  year = static_cast<int>(y + (month <= 2));
}

bool is_valid_civil(const CivilTime& ct) {
  if (ct.month < 1 || ct.month > 12) return false;
  if (ct.day < 1 || ct.day > days_in_month(ct.year, ct.month)) return false;
  if (ct.hour < 0 || ct.hour > 23) return false;
  if (ct.minute < 0 || ct.minute > 59) return false;
  if (ct.second < 0 || ct.second > 60) return false;  // permit leap second
  return true;
}

std::int64_t epoch_from_civil(const CivilTime& ct) {
  return days_from_civil(ct.year, ct.month, ct.day) * kSecondsPerDay +
         ct.hour * 3600 + ct.minute * 60 + ct.second;
}

CivilTime civil_from_epoch(std::int64_t t) {
  std::int64_t days = t / kSecondsPerDay;
  std::int64_t rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  CivilTime ct;
  civil_from_days(days, ct.year, ct.month, ct.day);
  ct.hour = static_cast<int>(rem / 3600);
  ct.minute = static_cast<int>((rem % 3600) / 60);
  ct.second = static_cast<int>(rem % 60);
  return ct;
}

std::string format_iso8601(std::int64_t t) {
  CivilTime ct = civil_from_epoch(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", ct.year,
                ct.month, ct.day, ct.hour, ct.minute, ct.second);
  return buf;
}

std::string format_iso_date(std::int64_t t) {
  CivilTime ct = civil_from_epoch(t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", ct.year, ct.month, ct.day);
  return buf;
}

std::int64_t parse_iso8601(const std::string& text) {
  std::size_t pos = 0;
  CivilTime ct;
  ct.year = fixed_digits(text, pos, 4, "year");
  expect_char(text, pos, '-');
  ct.month = fixed_digits(text, pos, 2, "month");
  expect_char(text, pos, '-');
  ct.day = fixed_digits(text, pos, 2, "day");
  expect_char(text, pos, 'T');
  ct.hour = fixed_digits(text, pos, 2, "hour");
  expect_char(text, pos, ':');
  ct.minute = fixed_digits(text, pos, 2, "minute");
  expect_char(text, pos, ':');
  ct.second = fixed_digits(text, pos, 2, "second");
  if (!is_valid_civil(ct)) malformed("invalid calendar time", text);

  if (pos >= text.size()) malformed("missing timezone designator", text);
  std::int64_t offset = 0;
  char tz = text[pos];
  if (tz == 'Z') {
    ++pos;
  } else if (tz == '+' || tz == '-') {
    ++pos;
    int oh = fixed_digits(text, pos, 2, "offset hour");
    if (pos < text.size() && text[pos] == ':') ++pos;
    int om = fixed_digits(text, pos, 2, "offset minute");
    if (oh > 14 || om > 59) malformed("offset out of range", text);
    offset = oh * 3600 + om * 60;
    if (tz == '-') offset = -offset;
  } else {
    malformed("bad timezone designator", text);
  }
  if (pos != text.size()) malformed("trailing characters", text);
  return epoch_from_civil(ct) - offset;
}

std::int64_t parse_iso_date(const std::string& text) {
  std::size_t pos = 0;
  CivilTime ct;
  ct.year = fixed_digits(text, pos, 4, "year");
  expect_char(text, pos, '-');
  ct.month = fixed_digits(text, pos, 2, "month");
  expect_char(text, pos, '-');
  ct.day = fixed_digits(text, pos, 2, "day");
  if (pos != text.size()) malformed("trailing characters", text);
  if (!is_valid_civil(ct)) malformed("invalid calendar date", text);
  return epoch_from_civil(ct);
}

std::int64_t parse_clf_timestamp(const std::string& text) {
  // dd/Mon/yyyy:HH:MM:SS zzzzz
  static constexpr std::array<const char*, 12> kMonths = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::size_t pos = 0;
  CivilTime ct;
  ct.day = fixed_digits(text, pos, 2, "day");
  expect_char(text, pos, '/');
  if (pos + 3 > text.size()) malformed("truncated month", text);
  std::string mon = text.substr(pos, 3);
  ct.month = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (mon == kMonths[i]) {
      ct.month = static_cast<int>(i) + 1;
      break;
    }
  }
  if (ct.month == 0) malformed("unknown month abbreviation", text);
  pos += 3;
  expect_char(text, pos, '/');
  ct.year = fixed_digits(text, pos, 4, "year");
  expect_char(text, pos, ':');
  ct.hour = fixed_digits(text, pos, 2, "hour");
  expect_char(text, pos, ':');
  ct.minute = fixed_digits(text, pos, 2, "minute");
  expect_char(text, pos, ':');
  ct.second = fixed_digits(text, pos, 2, "second");
  expect_char(text, pos, ' ');
  if (pos >= text.size() || (text[pos] != '+' && text[pos] != '-'))
    malformed("missing numeric offset", text);
  char sign = text[pos];
  ++pos;
  int oh = fixed_digits(text, pos, 2, "offset hour");
  int om = fixed_digits(text, pos, 2, "offset minute");
  if (pos != text.size()) malformed("trailing characters", text);
  if (!is_valid_civil(ct)) malformed("invalid calendar time", text);
  if (oh > 14 || om > 59) malformed("offset out of range", text);
  std::int64_t offset = oh * 3600 + om * 60;
  if (sign == '-') offset = -offset;
  return epoch_from_civil(ct) - offset;
}

void year_month_of(std::int64_t t, int& year, int& month) {
  CivilTime ct = civil_from_epoch(t);
  year = ct.year;
  month = ct.month;
}

std::int64_t month_start(int year, int month) {
  return days_from_civil(year, month, 1) * kSecondsPerDay;
}

double years_between(std::int64_t from, std::int64_t to) {
  return static_cast<double>(to - from) / kSecondsPerYear;
}

}  // namespace usemetrics
