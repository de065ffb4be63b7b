#pragma once

#include <cstdint>
#include <string>

namespace usemetrics {

// All instants in this library are UTC epoch seconds (int64_t).
// Calendar math uses proleptic Gregorian civil dates.

struct CivilTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int year, int month, int day);

// Inverse of days_from_civil.
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

bool is_valid_civil(const CivilTime& ct);

// Epoch seconds for a civil time interpreted as UTC.
std::int64_t epoch_from_civil(const CivilTime& ct);

CivilTime civil_from_epoch(std::int64_t t);

// "YYYY-MM-DDTHH:MM:SSZ". Formatting always uses UTC with trailing Z.
std::string format_iso8601(std::int64_t t);

// "YYYY-MM-DD" (midnight UTC when converted to an instant).
std::string format_iso_date(std::int64_t t);

// Accepts "YYYY-MM-DDTHH:MM:SS" followed by "Z", "+HH:MM", "-HH:MM",
// "+HHMM" or "-HHMM". Throws Error(MalformedLine) on anything else.
std::int64_t parse_iso8601(const std::string& text);

// Accepts "YYYY-MM-DD"; returns midnight UTC.
std::int64_t parse_iso_date(const std::string& text);

// Apache log timestamp "10/Oct/2000:13:55:36 -0700" converted to UTC.
// Throws Error(MalformedLine) on malformed input.
std::int64_t parse_clf_timestamp(const std::string& text);

// Year and month (1..12) of an instant, UTC.
void year_month_of(std::int64_t t, int& year, int& month);

// First second of a given UTC month.
std::int64_t month_start(int year, int month);

// Continuous age in years between two instants (365.25-day years).
double years_between(std::int64_t from, std::int64_t to);

inline constexpr double kSecondsPerYear = 365.25 * 86400.0;
inline constexpr std::int64_t kSecondsPerDay = 86400;

}  // namespace usemetrics
