#pragma once
// config.hpp
// Pipeline configuration: one JSON document drives every subcommand, so a
// run is reproducible from the config file plus the input files alone.
// Serialization is lossless: parse(render(c)) == c and render(parse(t)) is
// canonical.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "usemetrics/aggregate.hpp"
#include "usemetrics/core.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/ingest.hpp"
#include "usemetrics/obsolescence.hpp"
#include "usemetrics/synth.hpp"

namespace usemetrics {

struct InputSpec {
  std::string path;
  // One of: clf (plain or gzip Common/Combined Log Format), records
  // (canonical event TSV), context_objects (XML), jr1 (COUNTER CSV).
  std::string format = "records";

  bool operator==(const InputSpec&) const = default;
};

struct FitSettings {
  int n_exponentials = 3;
  int starts = 8;
  int max_iterations = 400;
  double bin_width_years = 1.0;

  bool operator==(const FitSettings&) const = default;
};

struct GraphSettings {
  std::string level = "article";  // article | journal
  bool directed = true;
  bool allow_self_pairs = false;
  std::int64_t dedup_window_seconds = 10;

  bool operator==(const GraphSettings&) const = default;
};

struct MetricSettings {
  double lambda = 0.85;
  double tolerance = 1e-12;
  int max_iterations = 1000;
  int eigen_max_iterations = 10000;

  bool operator==(const MetricSettings&) const = default;
};

struct MapSettings {
  int clusters = 4;
  int restarts = 8;

  bool operator==(const MapSettings&) const = default;
};

struct CatalogPaths {
  std::string resources;  // CSV paths; empty means no table
  std::string journals;
  std::string authors;
  std::string citations;
  std::string countries;

  bool operator==(const CatalogPaths&) const = default;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = all available cores
  std::string out_dir = "out";
  std::vector<InputSpec> inputs;
  std::vector<RouteRule> route_map;
  ClfEventOptions ingest;
  SessionizationPolicy session_policy;
  AggregationParams aggregation;
  FitSettings fit;
  GraphSettings graph;
  MetricSettings metrics;
  MapSettings map;
  CatalogPaths catalog;
  PopulationSpec population;
};

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

// A self-contained default: a year-long simulated window over a 50-year
// archive, mode mixture matching the default model's event masses.
PipelineConfig default_config();

// Throws Error(InvalidConfig) naming the offending key. Unknown keys are
// rejected.
PipelineConfig parse_config(const std::string& json_text);

std::string render_config(const PipelineConfig& config);

// CSV catalog loaders. Headers are fixed; rows with the wrong width throw
// Error(ColumnMismatch), bad dates Error(MalformedLine).
//   resources: resource_id,journal_id,publication_date,author_count,country,title
//   journals:  journal_id,title,publisher,platform,print_issn,online_issn
//   authors:   author_id,resource_id
//   countries: key,country
std::map<std::string, Resource> parse_resources_csv(const std::string& text);
std::map<std::string, JournalInfo> parse_journals_csv(const std::string& text);
std::map<std::string, std::vector<std::string>> parse_authors_csv(
    const std::string& text);
std::map<std::string, std::string> parse_countries_csv(
    const std::string& text);
//   citations: cited_resource_id,citing_resource_id,citation_date
std::vector<CitationRecord> parse_citations_csv(const std::string& text);

std::string resources_csv(const std::map<std::string, Resource>& resources);

// Loads whichever catalog tables the paths name; missing path = empty table.
Catalog load_catalog(const CatalogPaths& paths);

}  // namespace usemetrics
