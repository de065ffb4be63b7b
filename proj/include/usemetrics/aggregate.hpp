#pragma once

#include <optional>
#include <string>
#include <vector>

#include "usemetrics/core.hpp"
#include "usemetrics/ingest.hpp"

namespace usemetrics {

// ---------------------------------------------------------------------------
// Citations and read-cite points

struct CitationRecord {
  std::string cited_resource_id;
  std::string citing_resource_id;
  std::int64_t citation_date = 0;  // midnight UTC
};

struct ReadCitePoint {
  std::string author_id;
  double usage_rate = 0.0;       // reads per year, author-normalized
  double total_citations = 0.0;  // author-normalized
  double read10 = 0.0;           // usage_rate over articles <= 10 years old
};

// ---------------------------------------------------------------------------
// The aggregation function

enum class ReferentKind { Resource, Journal, Author, Country };

struct Referent {
  ReferentKind kind = ReferentKind::Resource;
  std::string key;
};

// Weighted, filtered event count attributed to the referent, divided by the
// normalization denominator. Deterministic; produced_at is set to the end of
// the date range so outputs are reproducible.
//
// Normalization: PerArticle divides the total by the number of catalog
// resources matching the referent and resource filter; PerAuthor divides
// each event's weight by its resource's author_count (per-paper author
// normalization).
UsageStatistic aggregate(const std::vector<UsageEvent>& events,
                         const Referent& referent,
                         const AggregationParams& params,
                         const Catalog& catalog);

// Usage Impact Factor for a census year: events in that year on the
// journal's articles published in the two preceding years, per article.
// Returns nullopt when no articles fall in the window (explicit absent
// value, not 0).
std::optional<UsageStatistic> usage_impact_factor(
    const std::vector<UsageEvent>& events, const std::string& journal,
    int census_year, const Catalog& catalog);

// ---------------------------------------------------------------------------
// COUNTER JR1

// One row per journal with any event in `year`, sorted by journal title;
// counts FullTextDownload events only. Columns: Journal, Publisher,
// Platform, Print ISSN, Online ISSN, Jan..Dec, YTD Total.
// Throws Error(MissingJournalMetadata) when a journal with events lacks
// catalog metadata.
std::string write_counter_jr1(const std::vector<UsageEvent>& events,
                              const Catalog& catalog, int year);

// Re-serializes parsed rows; parse -> write is byte-identical for canonical
// input.
std::string write_counter_jr1_rows(const std::vector<JournalMonthlyUsage>& rows);

// ---------------------------------------------------------------------------
// Read-cite author points

// usage_rate: author-normalized reads on the author's articles during
// [as_of - window_years, as_of), per year. total_citations: author-normalized
// citations up to as_of. read10: the usage_rate restricted to articles
// published within 10 years of as_of.
ReadCitePoint read_cite_point(const std::vector<UsageEvent>& events,
                              const std::vector<CitationRecord>& citations,
                              const std::string& author, std::int64_t as_of,
                              double window_years, const Catalog& catalog);

// ---------------------------------------------------------------------------
// Power-law fit (per-capita usage vs per-capita GDP style analyses)

struct PowerLawFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
};

// Least-squares line in log-log space; the slope is the exponent.
// Throws Error(NonPositiveInput) on non-positive coordinates or < 3 points;
// Error(DegenerateInput) when all x coincide.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

// ---------------------------------------------------------------------------
// Statistics export

// Tab-separated line: referent, value, and a digest of the parameters that
// produced it.
std::string statistic_line(const UsageStatistic& stat);

std::string params_digest(const AggregationParams& params);

}  // namespace usemetrics
