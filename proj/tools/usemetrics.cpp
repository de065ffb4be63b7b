// usemetrics: command-line front end for the usage-bibliometrics pipeline.
// Each subcommand wraps one library stage and talks to the others through
// files in the output directory, so any prefix of the pipeline can be
// re-run or replaced.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error (details land
// in <out>/error_report.json).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "usemetrics/aggregate.hpp"
#include "usemetrics/config.hpp"
#include "usemetrics/core.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/ingest.hpp"
#include "usemetrics/io_utils.hpp"
#include "usemetrics/mapping.hpp"
#include "usemetrics/net_metrics.hpp"
#include "usemetrics/obsolescence.hpp"
#include "usemetrics/parallel.hpp"
#include "usemetrics/rng.hpp"
#include "usemetrics/synth.hpp"
#include "usemetrics/time_utils.hpp"
#include "usemetrics/usage_graph.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace usemetrics;

namespace {

// ---------------------------------------------------------------------------
// Logging (stderr; level from USEMETRICS_LOG: quiet|warn|info|debug)

int g_log_level = 1;

int log_level_from_env() {
  const char* env = std::getenv("USEMETRICS_LOG");
  if (env == nullptr) return 1;
  std::string value = env;
  if (value == "quiet") return 0;
  if (value == "warn") return 1;
  if (value == "info") return 2;
  if (value == "debug") return 3;
  return 1;
}

void log_warn(const std::string& message) {
  if (g_log_level >= 1) std::cerr << "[warn] " << message << '\n';
}

void log_info(const std::string& message) {
  if (g_log_level >= 2) std::cerr << "[info] " << message << '\n';
}

// ---------------------------------------------------------------------------
// Shared context

struct Context {
  PipelineConfig config;
  fs::path out;

  fs::path path(const std::string& name) const { return out / name; }
};

std::string slurp(const fs::path& path) {
  if (!fs::exists(path))
    throw Error(ErrorCode::IoError, "no such file: " + path.string());
  return read_file(path.string());
}

void write_out(const Context& ctx, const std::string& name,
               const std::string& content) {
  atomic_write_file(ctx.path(name).string(), content);
  log_info("wrote " + ctx.path(name).string());
}

std::vector<UsageEvent> load_records(const fs::path& path) {
  if (!fs::exists(path))
    throw Error(ErrorCode::IoError, "no such file: " + path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_records(in);
}

std::string records_text(const std::vector<UsageEvent>& events) {
  std::ostringstream out;
  write_records(out, events);
  return out.str();
}

// Events for analysis stages: an explicit --in wins; otherwise prefer the
// sessionized stream, falling back to the raw one.
std::vector<UsageEvent> load_events(const Context& ctx,
                                    const std::string& in_flag) {
  if (!in_flag.empty()) return load_records(in_flag);
  if (fs::exists(ctx.path("sessions.records")))
    return load_records(ctx.path("sessions.records"));
  return load_records(ctx.path("events.records"));
}

Catalog load_context_catalog(const Context& ctx) {
  Catalog catalog = load_catalog(ctx.config.catalog);
  // simulate writes its article table next to its events; use it when no
  // explicit resource table is configured.
  if (catalog.resources.empty() && fs::exists(ctx.path("resources.csv")))
    catalog.resources = parse_resources_csv(slurp(ctx.path("resources.csv")));
  return catalog;
}

std::map<std::string, std::string> journal_of(const Catalog& catalog) {
  std::map<std::string, std::string> map;
  for (const auto& [id, resource] : catalog.resources)
    map[id] = resource.journal_id;
  return map;
}

constexpr char kKeysHeader[] = "event_id\tclient_ip\tuser_agent\tauth_user";

std::string keys_text(const std::vector<UsageEvent>& events,
                      const std::vector<KeySource>& sources) {
  std::ostringstream out;
  out << kKeysHeader << '\n';
  for (std::size_t i = 0; i < events.size(); ++i) {
    const KeySource& k = sources[i];
    out << events[i].event_id << '\t'
        << (k.client_ip.empty() ? "-" : k.client_ip) << '\t'
        << (k.user_agent.empty() ? "-" : k.user_agent) << '\t'
        << (k.auth_user.empty() ? "-" : k.auth_user) << '\n';
  }
  return out.str();
}

std::map<std::string, KeySource> parse_keys(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, KeySource> keys;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kKeysHeader)
        throw Error(ErrorCode::ColumnMismatch, "unexpected key sidecar header");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(
          start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4)
      throw Error(ErrorCode::ColumnMismatch, "key sidecar row needs 4 fields");
    auto unmask = [](const std::string& f) {
      return f == "-" ? std::string() : f;
    };
    keys[fields[0]] = {unmask(fields[1]), unmask(fields[2]),
                       unmask(fields[3])};
  }
  if (!saw_header)
    throw Error(ErrorCode::ColumnMismatch, "empty key sidecar");
  return keys;
}

// Without ingest key material the user id is the only identity a canonical
// record stream carries; it stands in for the client address.
KeySource fallback_key(const UsageEvent& event) {
  return {event.user_id, "", event.user_id};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const Context& ctx) {
  PopulationSpec spec = ctx.config.population;
  spec.seed = ctx.config.seed;
  SynthResult result = generate_log(spec);
  log_info("generated " + std::to_string(result.events.size()) + " events, " +
           std::to_string(result.resources.size()) + " articles");
  write_out(ctx, "events.records", records_text(result.events));
  write_out(ctx, "ground_truth.csv", ground_truth_csv(result, spec.seed));
  std::map<std::string, Resource> resources;
  for (const Resource& r : result.resources) resources[r.resource_id] = r;
  write_out(ctx, "resources.csv", resources_csv(resources));
  return 0;
}

int cmd_ingest(const Context& ctx) {
  if (ctx.config.inputs.empty())
    throw Error(ErrorCode::InvalidConfig, "config lists no inputs");

  std::vector<UsageEvent> events;
  std::vector<KeySource> sources;
  ordered_json files = ordered_json::array();
  std::size_t file_index = 0;
  for (const InputSpec& input : ctx.config.inputs) {
    ordered_json entry;
    entry["path"] = input.path;
    entry["format"] = input.format;
    if (input.format == "clf") {
      ClfFileResult parsed = parse_clf_file(input.path);
      ClfEventOptions options = ctx.config.ingest;
      options.seed = derive_seed(ctx.config.seed,
                                 "ingest_file_" + std::to_string(file_index));
      ClfEvents converted =
          clf_to_events(parsed.records, ctx.config.route_map, options);
      entry["events"] = converted.events.size();
      entry["dropped"] = converted.dropped;
      entry["malformed_lines"] = parsed.malformed_count;
      if (parsed.malformed_count > 0)
        log_warn(input.path + ": skipped " +
                 std::to_string(parsed.malformed_count) + " malformed lines");
      events.insert(events.end(), converted.events.begin(),
                    converted.events.end());
      sources.insert(sources.end(), converted.sources.begin(),
                     converted.sources.end());
    } else if (input.format == "records") {
      std::vector<UsageEvent> batch = load_records(input.path);
      entry["events"] = batch.size();
      for (const UsageEvent& e : batch) sources.push_back(fallback_key(e));
      events.insert(events.end(), batch.begin(), batch.end());
    } else if (input.format == "context_objects") {
      ContextObjectResult parsed = parse_context_objects(slurp(input.path));
      for (const std::string& warning : parsed.warnings)
        log_warn(input.path + ": " + warning);
      entry["events"] = parsed.events.size();
      entry["warnings"] = parsed.warnings.size();
      for (const ContextObjectEvent& co : parsed.events) {
        UsageEvent e = context_to_usage(co);
        sources.push_back(fallback_key(e));
        events.push_back(std::move(e));
      }
    } else {
      throw Error(ErrorCode::InvalidConfig,
                  input.format + " input is not an event source");
    }
    files.push_back(entry);
    ++file_index;
  }

  // Deterministic merge across files.
  std::vector<std::size_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return event_order_lt(events[a], events[b]);
                   });
  std::vector<UsageEvent> sorted_events;
  std::vector<KeySource> sorted_sources;
  sorted_events.reserve(events.size());
  sorted_sources.reserve(events.size());
  for (std::size_t i : order) {
    sorted_events.push_back(std::move(events[i]));
    sorted_sources.push_back(std::move(sources[i]));
  }

  EventValidator validator;
  std::size_t invalid = 0;
  for (const UsageEvent& e : sorted_events) {
    ValidationReport report = validator.validate(e);
    if (!report.valid()) ++invalid;
  }
  if (invalid > 0)
    log_warn(std::to_string(invalid) + " events failed validation checks");

  write_out(ctx, "events.records", records_text(sorted_events));
  write_out(ctx, "ingest_keys.tsv", keys_text(sorted_events, sorted_sources));
  ordered_json report;
  report["files"] = files;
  report["total_events"] = sorted_events.size();
  report["invalid_events"] = invalid;
  write_out(ctx, "ingest_report.json", report.dump(2) + "\n");
  return 0;
}

int cmd_sessionize(const Context& ctx, const std::string& in_flag,
                   const std::string& keys_flag) {
  fs::path in_path =
      in_flag.empty() ? ctx.path("events.records") : fs::path(in_flag);
  std::vector<UsageEvent> events = load_records(in_path);
  sort_events(events);

  std::vector<KeySource> sources;
  fs::path keys_path =
      keys_flag.empty() ? ctx.path("ingest_keys.tsv") : fs::path(keys_flag);
  if (fs::exists(keys_path)) {
    std::map<std::string, KeySource> by_id = parse_keys(slurp(keys_path));
    sources.reserve(events.size());
    for (const UsageEvent& e : events) {
      auto it = by_id.find(e.event_id);
      if (it == by_id.end())
        throw Error(ErrorCode::MissingSession,
                    "no key material for event " + e.event_id);
      sources.push_back(it->second);
    }
  } else {
    if (!keys_flag.empty())
      throw Error(ErrorCode::IoError, "no such file: " + keys_flag);
    log_info("no key sidecar; keying sessions by user id");
    for (const UsageEvent& e : events) sources.push_back(fallback_key(e));
  }

  std::vector<std::string> keys =
      make_session_keys(sources, ctx.config.session_policy.key_fields);
  std::vector<UsageEvent> sessioned =
      sessionize(events, keys, ctx.config.session_policy,
                 derive_seed(ctx.config.seed, "sessionize"));
  std::set<std::string> session_ids;
  for (const UsageEvent& e : sessioned) session_ids.insert(e.session_id);
  log_info(std::to_string(sessioned.size()) + " events in " +
           std::to_string(session_ids.size()) + " sessions");
  write_out(ctx, "sessions.records", records_text(sessioned));
  return 0;
}

int cmd_aggregate(const Context& ctx, const std::string& in_flag,
                  const std::string& kind_flag,
                  const std::vector<std::string>& referents) {
  std::vector<UsageEvent> events = load_events(ctx, in_flag);
  Catalog catalog = load_context_catalog(ctx);

  ReferentKind kind;
  if (kind_flag == "resource")
    kind = ReferentKind::Resource;
  else if (kind_flag == "journal")
    kind = ReferentKind::Journal;
  else if (kind_flag == "author")
    kind = ReferentKind::Author;
  else if (kind_flag == "country")
    kind = ReferentKind::Country;
  else
    throw Error(ErrorCode::InvalidConfig,
                "unknown referent kind '" + kind_flag + "'");

  std::vector<std::string> keys = referents;
  if (keys.empty()) {
    if (kind != ReferentKind::Journal)
      throw Error(ErrorCode::InvalidConfig,
                  "--referent is required for this referent kind");
    std::set<std::string> journals;
    for (const auto& [id, journal] : catalog.journals) journals.insert(id);
    for (const auto& [id, resource] : catalog.resources)
      if (!resource.journal_id.empty()) journals.insert(resource.journal_id);
    if (journals.empty())
      throw Error(ErrorCode::InvalidConfig,
                  "no catalog journals to aggregate over; pass --referent");
    keys.assign(journals.begin(), journals.end());
  }

  std::ostringstream out;
  out << "# referent\tvalue\tparams_digest\n";
  for (const std::string& key : keys) {
    UsageStatistic stat =
        aggregate(events, {kind, key}, ctx.config.aggregation, catalog);
    out << statistic_line(stat) << '\n';
  }
  write_out(ctx, "statistics.tsv", out.str());
  return 0;
}

int cmd_uif(const Context& ctx, const std::string& in_flag,
            const std::string& journal, int year) {
  std::vector<UsageEvent> events = load_events(ctx, in_flag);
  Catalog catalog = load_context_catalog(ctx);
  std::optional<UsageStatistic> uif =
      usage_impact_factor(events, journal, year, catalog);
  std::ostringstream out;
  out << "journal\tcensus_year\tuif\n";
  out << journal << '\t' << year << '\t'
      << (uif.has_value() ? format_double(uif->value) : "NA") << '\n';
  if (!uif.has_value())
    log_warn("journal " + journal + " published no articles in " +
             std::to_string(year - 2) + "-" + std::to_string(year - 1));
  write_out(ctx, "uif.tsv", out.str());
  return 0;
}

int cmd_jr1(const Context& ctx, const std::string& in_flag, int year) {
  std::vector<UsageEvent> events = load_events(ctx, in_flag);
  Catalog catalog = load_context_catalog(ctx);
  write_out(ctx, "jr1_" + std::to_string(year) + ".csv",
            write_counter_jr1(events, catalog, year));
  return 0;
}

ordered_json model_report(const ObsolescenceModel& model,
                          const FitDiagnostics& diagnostics) {
  ordered_json components = ordered_json::array();
  for (const ModelComponent& c : model.components) {
    ordered_json entry;
    entry["label"] = std::string(1, c.label);
    entry["amplitude"] = c.amplitude;
    entry["decay"] = c.decay;
    components.push_back(entry);
  }
  ordered_json out;
  out["components"] = components;
  out["s0"] = model.s0.has_value() ? ordered_json(*model.s0)
                                   : ordered_json(nullptr);
  out["residual_norm"] = diagnostics.residual_norm;
  out["iterations"] = diagnostics.iterations;
  out["converged"] = diagnostics.converged;
  out["starts"] = diagnostics.starts;
  return out;
}

int cmd_fit(const Context& ctx, const std::string& in_flag,
            const std::string& curve_flag) {
  AgeingCurve curve;
  if (!curve_flag.empty()) {
    curve = parse_ageing_curve(slurp(curve_flag));
  } else {
    std::vector<UsageEvent> events = load_events(ctx, in_flag);
    Catalog catalog = load_context_catalog(ctx);
    if (catalog.resources.empty())
      throw Error(ErrorCode::MissingPublicationDate,
                  "no resource table; cannot compute article ages");
    curve = bin_usage_by_age(events, catalog.resources,
                             ctx.config.fit.bin_width_years,
                             ctx.config.aggregation.date_start,
                             ctx.config.aggregation.date_end);
  }
  write_out(ctx, "ageing_curve.csv", ageing_curve_csv(curve));

  FitOptions options;
  options.starts = ctx.config.fit.starts;
  options.max_iterations = ctx.config.fit.max_iterations;
  options.seed = derive_seed(ctx.config.seed, "fit");
  auto [model, diagnostics] =
      fit_obsolescence(curve, ctx.config.fit.n_exponentials, true,
                       std::nullopt, options);
  if (!diagnostics.converged)
    log_warn("fit did not converge; parameters are best-effort");

  write_out(ctx, "fit.json", model_report(model, diagnostics).dump(2) + "\n");
  std::ostringstream fitted;
  fitted << "age,rate,article_count,fitted_rate\n";
  for (const AgeBin& bin : curve.bins) {
    fitted << format_double(bin.age_midpoint) << ',' << format_double(bin.rate)
           << ',' << bin.article_count << ','
           << format_double(eval_model(model, bin.age_midpoint)) << '\n';
  }
  write_out(ctx, "fitted_curve.csv", fitted.str());
  return 0;
}

PairLevel level_of(const Context& ctx) {
  return ctx.config.graph.level == "journal" ? PairLevel::Journal
                                             : PairLevel::Article;
}

int cmd_graph(const Context& ctx, const std::string& in_flag) {
  std::vector<UsageEvent> events = load_events(ctx, in_flag);
  Catalog catalog = load_context_catalog(ctx);
  ExtractOptions options;
  options.allow_self_pairs = ctx.config.graph.allow_self_pairs;
  options.dedup_window_seconds = ctx.config.graph.dedup_window_seconds;
  PairFrequencyTable pairs =
      extract_pairs(events, level_of(ctx), ctx.config.graph.directed,
                    journal_of(catalog), options);
  log_info(std::to_string(pairs.counts.size()) + " distinct pairs");
  write_out(ctx, "pairs.tsv", write_pair_table(pairs));
  write_out(ctx, "transition.csv",
            write_transition_matrix(transition_matrix(pairs)));
  return 0;
}

int cmd_metrics(const Context& ctx, const std::string& in_flag,
                bool normalize_betweenness) {
  fs::path in_path =
      in_flag.empty() ? ctx.path("pairs.tsv") : fs::path(in_flag);
  PairFrequencyTable pairs = parse_pair_table(
      slurp(in_path), level_of(ctx), ctx.config.graph.directed);
  AdjacencyMatrix A = adjacency_from_pairs(pairs);
  log_info("graph with " + std::to_string(A.n()) + " nodes");

  MetricTable table;
  table.nodes = A.nodes;
  table.values.resize(static_cast<Eigen::Index>(A.nodes.size()), 0);
  table.add("in_degree", degree_centrality(A, Direction::In));
  table.add("out_degree", degree_centrality(A, Direction::Out));
  PowerIterationResult pr =
      pagerank(A, ctx.config.metrics.lambda, ctx.config.metrics.tolerance,
               ctx.config.metrics.max_iterations);
  table.add("pagerank", pr.values);
  log_info("pagerank converged in " + std::to_string(pr.iterations) +
           " iterations");
  try {
    PowerIterationResult ev =
        eigenvector_centrality(A, ctx.config.metrics.tolerance,
                               ctx.config.metrics.eigen_max_iterations);
    table.add("eigenvector", ev.values);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroMatrix) throw;
    log_warn(std::string("eigenvector centrality skipped: ") + e.what());
  }
  int threads = ctx.config.threads;
  table.add("betweenness",
            betweenness(A,
                        normalize_betweenness ? BetweennessNorm::PairCount
                                              : BetweennessNorm::None,
                        threads));
  ClosenessResult close = closeness(A, threads);

  table.metadata["lambda"] = format_double(ctx.config.metrics.lambda);
  table.metadata["tolerance"] = format_double(ctx.config.metrics.tolerance);
  table.metadata["level"] = ctx.config.graph.level;
  table.metadata["directed"] = ctx.config.graph.directed ? "true" : "false";
  table.metadata["betweenness_norm"] =
      normalize_betweenness ? "pair_count" : "none";
  write_out(ctx, "metrics.csv",
            write_metric_table(table, {{"closeness", close.values}}));
  return 0;
}

int cmd_correlate(const Context& ctx, const std::string& in_flag) {
  fs::path in_path =
      in_flag.empty() ? ctx.path("metrics.csv") : fs::path(in_flag);
  MetricTable table = parse_metric_table(slurp(in_path));
  if (auto it = table.metadata.find("skipped_columns");
      it != table.metadata.end())
    log_info("optional-valued columns skipped: " + it->second);

  // Constant columns carry no rank information; drop them rather than fail
  // the whole run.
  MetricTable usable;
  usable.nodes = table.nodes;
  usable.values.resize(static_cast<Eigen::Index>(table.nodes.size()), 0);
  std::vector<std::string> dropped;
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    Eigen::VectorXd column = table.values.col(static_cast<Eigen::Index>(c));
    if (column.size() > 0 &&
        (column.array() == column[0]).all()) {
      dropped.push_back(table.names[c]);
      continue;
    }
    usable.add(table.names[c], column);
  }
  if (!dropped.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < dropped.size(); ++i)
      joined += (i > 0 ? "," : "") + dropped[i];
    log_warn("constant metric columns dropped: " + joined);
  }
  if (usable.names.size() < 2)
    throw Error(ErrorCode::DegenerateInput,
                "fewer than 2 varying metric columns to correlate");

  CorrelationMatrix corr = spearman_matrix(usable);
  write_out(ctx, "correlation.csv", correlation_csv(corr));

  PcaResult pca = measure_pca(usable);
  std::ostringstream out;
  out << "# variance_ratios:";
  for (Eigen::Index c = 0; c < pca.variance_ratios.size(); ++c)
    out << (c == 0 ? " " : ",") << format_double(pca.variance_ratios[c]);
  out << '\n';
  std::vector<std::string> header = {"measure"};
  for (Eigen::Index c = 0; c < pca.scores.cols(); ++c)
    header.push_back("axis" + std::to_string(c + 1));
  out << csv_join(header) << '\n';
  for (std::size_t i = 0; i < pca.names.size(); ++i) {
    std::vector<std::string> row = {pca.names[i]};
    for (Eigen::Index c = 0; c < pca.scores.cols(); ++c)
      row.push_back(
          format_double(pca.scores(static_cast<Eigen::Index>(i), c)));
    out << csv_join(row) << '\n';
  }
  write_out(ctx, "measure_map.csv", out.str());
  return 0;
}

int cmd_map(const Context& ctx, const std::string& in_flag) {
  std::vector<UsageEvent> events = load_events(ctx, in_flag);
  Catalog catalog = load_context_catalog(ctx);
  JournalMapOptions options;
  options.clusters = ctx.config.map.clusters;
  options.kmeans.restarts = ctx.config.map.restarts;
  options.kmeans.seed = derive_seed(ctx.config.seed, "map");
  options.extract.allow_self_pairs = ctx.config.graph.allow_self_pairs;
  options.extract.dedup_window_seconds = ctx.config.graph.dedup_window_seconds;
  JournalMapResult map = journal_map(events, journal_of(catalog), options);

  std::ostringstream out;
  out << "# similarity: symmetrized_counts\n";
  out << "# variance_ratios: " << format_double(map.variance_ratios[0]) << ','
      << format_double(map.variance_ratios[1]) << '\n';
  out << journal_map_csv(map);
  write_out(ctx, "journal_map.csv", out.str());
  return 0;
}

int cmd_report(const Context& ctx) {
  std::ostringstream report;
  report << "usemetrics pipeline report\n";
  report << "==========================\n\n";

  fs::path events_path = fs::exists(ctx.path("sessions.records"))
                             ? ctx.path("sessions.records")
                             : ctx.path("events.records");
  if (fs::exists(events_path)) {
    std::vector<UsageEvent> events = load_records(events_path);
    std::set<std::string> users, sessions, resources;
    std::int64_t t_min = 0, t_max = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const UsageEvent& e = events[i];
      if (!e.user_id.empty()) users.insert(e.user_id);
      if (!e.session_id.empty()) sessions.insert(e.session_id);
      resources.insert(e.resource_id);
      if (i == 0 || e.timestamp < t_min) t_min = e.timestamp;
      if (i == 0 || e.timestamp > t_max) t_max = e.timestamp;
    }
    report << "Events: " << events.size() << " (" << events_path.filename()
           << ")\n";
    report << "Users: " << users.size() << ", sessions: " << sessions.size()
           << ", resources: " << resources.size() << "\n";
    if (!events.empty())
      report << "Span: " << format_iso8601(t_min) << " .. "
             << format_iso8601(t_max) << "\n";
    report << "\n";
  }

  if (fs::exists(ctx.path("statistics.tsv"))) {
    report << "Usage statistics (statistics.tsv)\n";
    std::istringstream in(slurp(ctx.path("statistics.tsv")));
    std::string line;
    std::vector<std::pair<double, std::string>> ranked;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::size_t tab1 = line.find('\t');
      std::size_t tab2 =
          tab1 == std::string::npos ? std::string::npos
                                    : line.find('\t', tab1 + 1);
      if (tab1 == std::string::npos || tab2 == std::string::npos) continue;
      ranked.emplace_back(std::stod(line.substr(tab1 + 1, tab2 - tab1 - 1)),
                          line.substr(0, tab1));
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                       return a.first > b.first;
                     });
    std::size_t top = std::min<std::size_t>(ranked.size(), 10);
    for (std::size_t i = 0; i < top; ++i)
      report << "  " << (i + 1) << ". " << ranked[i].second << "  "
             << format_double(ranked[i].first) << "\n";
    report << "\n";
  }

  bool have_fit = fs::exists(ctx.path("fit.json"));
  ObsolescenceModel fitted;
  if (have_fit) {
    ordered_json fit = ordered_json::parse(slurp(ctx.path("fit.json")));
    report << "Fitted obsolescence model\n";
    for (const auto& component : fit["components"]) {
      std::string label = component["label"].get<std::string>();
      double amplitude = component["amplitude"].get<double>();
      double decay = component["decay"].get<double>();
      fitted.components.push_back({label[0], amplitude, decay});
      report << "  " << label << ": amplitude "
             << format_double(amplitude) << ", decay "
             << format_double(decay) << "/yr\n";
    }
    report << "  residual_norm "
           << format_double(fit["residual_norm"].get<double>())
           << ", converged "
           << (fit["converged"].get<bool>() ? "yes" : "no") << "\n\n";
  }

  if (fs::exists(ctx.path("metrics.csv"))) {
    MetricTable table = parse_metric_table(slurp(ctx.path("metrics.csv")));
    report << "Top nodes per network metric\n";
    for (std::size_t c = 0; c < table.names.size(); ++c) {
      Eigen::VectorXd column = table.values.col(static_cast<Eigen::Index>(c));
      std::vector<std::size_t> order(table.nodes.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return column[static_cast<Eigen::Index>(a)] >
                                column[static_cast<Eigen::Index>(b)];
                       });
      report << "  " << table.names[c] << ":";
      std::size_t top = std::min<std::size_t>(order.size(), 5);
      for (std::size_t i = 0; i < top; ++i)
        report << (i == 0 ? " " : ", ") << table.nodes[order[i]] << " ("
               << format_double(column[static_cast<Eigen::Index>(order[i])])
               << ")";
      report << "\n";
    }
    report << "\n";
  }

  if (fs::exists(ctx.path("journal_map.csv"))) {
    std::istringstream in(slurp(ctx.path("journal_map.csv")));
    std::string line;
    std::map<std::string, int> cluster_sizes;
    bool saw_header = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!saw_header) {
        saw_header = true;
        continue;
      }
      std::vector<std::string> fields = csv_split(line);
      if (fields.size() == 4) ++cluster_sizes[fields[3]];
    }
    report << "Journal map clusters:";
    for (const auto& [cluster, size] : cluster_sizes)
      report << " c" << cluster << "=" << size;
    report << "\n\n";
  }

  // Plot-ready CSVs.
  if (fs::exists(ctx.path("ageing_curve.csv")) && have_fit) {
    AgeingCurve curve = parse_ageing_curve(slurp(ctx.path("ageing_curve.csv")));
    std::ostringstream obsolescence;
    obsolescence << "age,observed_rate,fitted_rate\n";
    for (const AgeBin& bin : curve.bins)
      obsolescence << format_double(bin.age_midpoint) << ','
                   << format_double(bin.rate) << ','
                   << format_double(eval_model(fitted, bin.age_midpoint))
                   << '\n';
    write_out(ctx, "plot_obsolescence.csv", obsolescence.str());

    std::ostringstream components;
    components << "age";
    for (const ModelComponent& c : fitted.components)
      components << ',' << c.label;
    components << ",total\n";
    for (double t = 0.0; t <= 50.0; t += 0.5) {
      components << format_double(t);
      for (const ModelComponent& c : fitted.components)
        components << ','
                   << format_double(c.amplitude * std::exp(-c.decay * t));
      components << ',' << format_double(eval_model(fitted, t)) << '\n';
    }
    write_out(ctx, "plot_model_components.csv", components.str());
  }

  if (!ctx.config.catalog.authors.empty() &&
      !ctx.config.catalog.citations.empty() && fs::exists(events_path)) {
    Catalog catalog = load_context_catalog(ctx);
    std::vector<CitationRecord> citations =
        parse_citations_csv(slurp(ctx.config.catalog.citations));
    std::vector<UsageEvent> events = load_records(events_path);
    std::ostringstream readcite;
    readcite << "author,usage_rate,total_citations,read10\n";
    for (const auto& [author, articles] : catalog.author_articles) {
      (void)articles;
      ReadCitePoint point =
          read_cite_point(events, citations, author,
                          ctx.config.aggregation.date_end, 2.0, catalog);
      readcite << csv_escape(author) << ',' << format_double(point.usage_rate)
               << ',' << format_double(point.total_citations) << ','
               << format_double(point.read10) << '\n';
    }
    write_out(ctx, "plot_read_cite.csv", readcite.str());
  }

  write_out(ctx, "report.txt", report.str());
  std::cout << report.str();
  return 0;
}

int write_error_report(const Context& ctx, const std::string& subcommand,
                       const Error& error) {
  ordered_json report;
  report["subcommand"] = subcommand;
  report["error_code"] = error.code_name();
  report["message"] = error.what();
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  try {
    atomic_write_file(ctx.path("error_report.json").string(),
                      report.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write error report: " << e.what() << '\n';
  }
  std::cerr << "error: " << error.code_name() << ": " << error.what() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  g_log_level = log_level_from_env();

  CLI::App app{"usage bibliometrics pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  std::string out_flag;
  int threads_flag = -1;
  std::int64_t seed_flag = -1;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.add_option("--out", out_flag, "output directory (default from config)");
  app.add_option("--threads", threads_flag,
                 "worker threads; 0 = all cores")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed_flag, "override the config seed")
      ->check(CLI::NonNegativeNumber);

  std::string in_flag;
  std::string keys_flag;
  std::string curve_flag;
  std::string referent_kind = "journal";
  std::vector<std::string> referents;
  std::string journal;
  int year = 0;
  bool normalize_betweenness = false;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "generate a synthetic usage log with ground truth");
  CLI::App* ingest = app.add_subcommand(
      "ingest", "parse configured inputs into canonical event records");
  CLI::App* sessionize_cmd =
      app.add_subcommand("sessionize", "assign session ids to events");
  sessionize_cmd->add_option("--in", in_flag, "event records file");
  sessionize_cmd->add_option("--keys", keys_flag, "ingest key sidecar");
  CLI::App* aggregate_cmd = app.add_subcommand(
      "aggregate", "compute usage statistics for referents");
  aggregate_cmd->add_option("--in", in_flag, "event records file");
  aggregate_cmd->add_option("--referent-kind", referent_kind,
                            "resource|journal|author|country");
  aggregate_cmd->add_option("--referent", referents,
                            "referent key (repeatable)");
  CLI::App* uif_cmd =
      app.add_subcommand("uif", "usage impact factor for one journal");
  uif_cmd->add_option("--in", in_flag, "event records file");
  uif_cmd->add_option("--journal", journal, "journal id")->required();
  uif_cmd->add_option("--year", year, "census year")->required();
  CLI::App* jr1_cmd =
      app.add_subcommand("jr1", "COUNTER JR1 report for one year");
  jr1_cmd->add_option("--in", in_flag, "event records file");
  jr1_cmd->add_option("--year", year, "report year")->required();
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "bin usage by article age and fit the decay model");
  fit_cmd->add_option("--in", in_flag, "event records file");
  fit_cmd->add_option("--curve", curve_flag,
                      "precomputed ageing curve CSV (skips binning)");
  CLI::App* graph_cmd = app.add_subcommand(
      "graph", "extract session pairs and the transition matrix");
  graph_cmd->add_option("--in", in_flag, "event records file");
  CLI::App* metrics_cmd =
      app.add_subcommand("metrics", "network metrics over the pair graph");
  metrics_cmd->add_option("--in", in_flag, "pair table file");
  metrics_cmd->add_flag("--normalize-betweenness", normalize_betweenness,
                        "divide betweenness by (n-1)(n-2)");
  CLI::App* correlate_cmd = app.add_subcommand(
      "correlate", "rank correlations and principal axes of the metrics");
  correlate_cmd->add_option("--in", in_flag, "metric table CSV");
  CLI::App* map_cmd =
      app.add_subcommand("map", "journal co-use map with clusters");
  map_cmd->add_option("--in", in_flag, "event records file");
  CLI::App* report_cmd = app.add_subcommand(
      "report", "human-readable summary plus plot-ready CSVs");

  for (CLI::App* sub :
       {simulate, ingest, sessionize_cmd, aggregate_cmd, uif_cmd, jr1_cmd,
        fit_cmd, graph_cmd, metrics_cmd, correlate_cmd, map_cmd, report_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Context ctx;
  try {
    ctx.config =
        config_path.empty() ? default_config() : parse_config(slurp(config_path));
  } catch (const Error& e) {
    std::cerr << "error: " << e.code_name() << ": " << e.what() << '\n';
    return 1;
  }
  if (seed_flag >= 0) ctx.config.seed = static_cast<std::uint64_t>(seed_flag);
  ctx.config.ingest.seed = ctx.config.seed;
  ctx.config.population.seed = ctx.config.seed;
  if (threads_flag >= 0) ctx.config.threads = threads_flag;
  if (!out_flag.empty()) ctx.config.out_dir = out_flag;
  ctx.out = ctx.config.out_dir;

  std::string name = app.get_subcommands().front()->get_name();
  try {
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec)
      throw Error(ErrorCode::IoError,
                  "cannot create output directory " + ctx.out.string());
    if (name == "simulate") return cmd_simulate(ctx);
    if (name == "ingest") return cmd_ingest(ctx);
    if (name == "sessionize") return cmd_sessionize(ctx, in_flag, keys_flag);
    if (name == "aggregate")
      return cmd_aggregate(ctx, in_flag, referent_kind, referents);
    if (name == "uif") return cmd_uif(ctx, in_flag, journal, year);
    if (name == "jr1") return cmd_jr1(ctx, in_flag, year);
    if (name == "fit") return cmd_fit(ctx, in_flag, curve_flag);
    if (name == "graph") return cmd_graph(ctx, in_flag);
    if (name == "metrics")
      return cmd_metrics(ctx, in_flag, normalize_betweenness);
    if (name == "correlate") return cmd_correlate(ctx, in_flag);
    if (name == "map") return cmd_map(ctx, in_flag);
    if (name == "report") return cmd_report(ctx);
    std::cerr << "error: unknown subcommand " << name << '\n';
    return 1;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig ||
        e.code() == ErrorCode::IoError) {
      std::cerr << "error: " << e.code_name() << ": " << e.what() << '\n';
      return 1;
    }
    return write_error_report(ctx, name, e);
  } catch (const std::exception& e) {
    Error wrapped(ErrorCode::IoError, e.what());
    std::cerr << "error: unexpected: " << e.what() << '\n';
    return write_error_report(ctx, name, wrapped);
  }
}
