#include "usemetrics/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

#include "usemetrics/io_utils.hpp"
#include "usemetrics/time_utils.hpp"

namespace usemetrics {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, where + ": " + what);
}

void check_keys(const ojson& object, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      bad(where, "unknown key '" + key + "'");
  }
}

const ojson& field(const ojson& object, const char* key,
                   const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) bad(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string get_string(const ojson& v, const std::string& where) {
  if (!v.is_string()) bad(where, "expected a string");
  return v.get<std::string>();
}

double get_number(const ojson& v, const std::string& where) {
  if (!v.is_number()) bad(where, "expected a number");
  return v.get<double>();
}

std::int64_t get_integer(const ojson& v, const std::string& where) {
  if (!v.is_number_integer()) bad(where, "expected an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const ojson& v, const std::string& where) {
  if (!v.is_boolean()) bad(where, "expected a boolean");
  return v.get<bool>();
}

std::int64_t get_instant(const ojson& v, const std::string& where) {
  std::string text = get_string(v, where);
  try {
    return parse_iso8601(text);
  } catch (const Error&) {
  }
  try {
    return parse_iso_date(text);
  } catch (const Error&) {
    bad(where, "not an ISO 8601 instant or date: " + text);
  }
}

ojson instant(std::int64_t t) { return format_iso8601(t); }

ojson tokens_json(const std::optional<std::vector<RequestType>>& types) {
  if (!types.has_value()) return nullptr;
  ojson list = ojson::array();
  for (const RequestType& t : *types) list.push_back(t.token());
  return list;
}

std::optional<std::vector<RequestType>> parse_tokens(
    const ojson& v, const std::string& where) {
  if (v.is_null()) return std::nullopt;
  if (!v.is_array()) bad(where, "expected null or an array of tokens");
  std::vector<RequestType> types;
  for (const auto& item : v) {
    try {
      types.push_back(RequestType::from_token(get_string(item, where)));
    } catch (const Error& e) {
      bad(where, e.what());
    }
  }
  return types;
}

ojson aggregation_json(const AggregationParams& p) {
  ojson resource_filter;
  resource_filter["journal_id"] =
      p.resource_filter.journal_id.has_value()
          ? ojson(*p.resource_filter.journal_id)
          : ojson(nullptr);
  if (p.resource_filter.publication_window.has_value()) {
    resource_filter["publication_window"] =
        ojson::array({instant(p.resource_filter.publication_window->first),
                      instant(p.resource_filter.publication_window->second)});
  } else {
    resource_filter["publication_window"] = nullptr;
  }
  resource_filter["id_list"] = p.resource_filter.id_list.has_value()
                                   ? ojson(*p.resource_filter.id_list)
                                   : ojson(nullptr);

  ojson user_filter;
  user_filter["min_monthly_requests"] =
      p.user_filter.min_monthly_requests.has_value()
          ? ojson(*p.user_filter.min_monthly_requests)
          : ojson(nullptr);
  user_filter["full_text_only"] = p.user_filter.full_text_only;
  user_filter["request_type_in"] = tokens_json(p.user_filter.request_type_in);

  const char* normalization = "none";
  if (p.normalization == Normalization::PerArticle)
    normalization = "per_article";
  else if (p.normalization == Normalization::PerAuthor)
    normalization = "per_author";

  ojson out;
  out["date_start"] = instant(p.date_start);
  out["date_end"] = instant(p.date_end);
  out["request_type_filter"] = tokens_json(p.request_type_filter);
  out["resource_filter"] = resource_filter;
  out["user_filter"] = user_filter;
  out["normalization"] = normalization;
  out["type_weights"] = ojson(p.type_weights);
  return out;
}

AggregationParams parse_aggregation(const ojson& v, const std::string& where) {
  if (!v.is_object()) bad(where, "expected an object");
  check_keys(v, where,
             {"date_start", "date_end", "request_type_filter",
              "resource_filter", "user_filter", "normalization",
              "type_weights"});
  AggregationParams p;
  p.date_start = get_instant(field(v, "date_start", where), where);
  p.date_end = get_instant(field(v, "date_end", where), where);
  p.request_type_filter = parse_tokens(field(v, "request_type_filter", where),
                                       where + ".request_type_filter");

  const ojson& rf = field(v, "resource_filter", where);
  std::string rf_where = where + ".resource_filter";
  if (!rf.is_object()) bad(rf_where, "expected an object");
  check_keys(rf, rf_where, {"journal_id", "publication_window", "id_list"});
  const ojson& journal = field(rf, "journal_id", rf_where);
  if (!journal.is_null())
    p.resource_filter.journal_id = get_string(journal, rf_where);
  const ojson& window = field(rf, "publication_window", rf_where);
  if (!window.is_null()) {
    if (!window.is_array() || window.size() != 2)
      bad(rf_where, "publication_window must be [start, end]");
    p.resource_filter.publication_window = {
        get_instant(window[0], rf_where), get_instant(window[1], rf_where)};
  }
  const ojson& ids = field(rf, "id_list", rf_where);
  if (!ids.is_null()) {
    if (!ids.is_array()) bad(rf_where, "id_list must be null or an array");
    std::vector<std::string> list;
    for (const auto& item : ids) list.push_back(get_string(item, rf_where));
    p.resource_filter.id_list = std::move(list);
  }

  const ojson& uf = field(v, "user_filter", where);
  std::string uf_where = where + ".user_filter";
  if (!uf.is_object()) bad(uf_where, "expected an object");
  check_keys(uf, uf_where,
             {"min_monthly_requests", "full_text_only", "request_type_in"});
  const ojson& minreq = field(uf, "min_monthly_requests", uf_where);
  if (!minreq.is_null())
    p.user_filter.min_monthly_requests =
        static_cast<int>(get_integer(minreq, uf_where));
  p.user_filter.full_text_only =
      get_bool(field(uf, "full_text_only", uf_where), uf_where);
  p.user_filter.request_type_in = parse_tokens(
      field(uf, "request_type_in", uf_where), uf_where + ".request_type_in");

  std::string norm = get_string(field(v, "normalization", where), where);
  if (norm == "none")
    p.normalization = Normalization::None;
  else if (norm == "per_article")
    p.normalization = Normalization::PerArticle;
  else if (norm == "per_author")
    p.normalization = Normalization::PerAuthor;
  else
    bad(where, "unknown normalization '" + norm + "'");

  const ojson& weights = field(v, "type_weights", where);
  if (!weights.is_object()) bad(where, "type_weights must be an object");
  for (const auto& [token, weight] : weights.items())
    p.type_weights[token] = get_number(weight, where + ".type_weights");
  return p;
}

ojson model_json(const ObsolescenceModel& model) {
  ojson components = ojson::array();
  for (const ModelComponent& c : model.components) {
    ojson entry;
    entry["label"] = std::string(1, c.label);
    entry["amplitude"] = c.amplitude;
    entry["decay"] = c.decay;
    components.push_back(entry);
  }
  ojson out;
  out["components"] = components;
  out["s0"] = model.s0.has_value() ? ojson(*model.s0) : ojson(nullptr);
  return out;
}

ObsolescenceModel parse_model(const ojson& v, const std::string& where) {
  if (!v.is_object()) bad(where, "expected an object");
  check_keys(v, where, {"components", "s0"});
  ObsolescenceModel model;
  const ojson& components = field(v, "components", where);
  if (!components.is_array()) bad(where, "components must be an array");
  for (const auto& entry : components) {
    if (!entry.is_object()) bad(where, "component must be an object");
    check_keys(entry, where, {"label", "amplitude", "decay"});
    std::string label = get_string(field(entry, "label", where), where);
    if (label.size() != 1) bad(where, "component label must be one letter");
    ModelComponent c;
    c.label = label[0];
    c.amplitude = get_number(field(entry, "amplitude", where), where);
    c.decay = get_number(field(entry, "decay", where), where);
    model.components.push_back(c);
  }
  const ojson& s0 = field(v, "s0", where);
  if (!s0.is_null()) model.s0 = get_number(s0, where);
  return model;
}

ojson population_json(const PopulationSpec& spec) {
  ojson groups = ojson::array();
  for (const UserGroup& g : spec.groups) {
    ojson entry;
    entry["label"] = g.label;
    entry["count"] = g.count;
    entry["activity_rate"] = g.activity_rate;
    entry["mode_weights"] = ojson(g.mode_weights);
    entry["request_type_mix"] = ojson(g.request_type_mix);
    groups.push_back(entry);
  }
  ojson journals = ojson::array();
  for (const SynthJournal& j : spec.journals) {
    ojson entry;
    entry["journal_id"] = j.journal_id;
    entry["article_count"] = j.article_count;
    entry["pub_start"] = instant(j.pub_start);
    entry["pub_end"] = instant(j.pub_end);
    journals.push_back(entry);
  }
  ojson out;
  out["window"] =
      ojson::array({instant(spec.window_start), instant(spec.window_end)});
  out["groups"] = groups;
  out["journals"] = journals;
  out["model"] = model_json(spec.model);
  return out;
}

PopulationSpec parse_population(const ojson& v, const std::string& where,
                                std::uint64_t seed) {
  if (!v.is_object()) bad(where, "expected an object");
  check_keys(v, where, {"window", "groups", "journals", "model"});
  PopulationSpec spec;
  spec.seed = seed;
  const ojson& window = field(v, "window", where);
  if (!window.is_array() || window.size() != 2)
    bad(where, "window must be [start, end]");
  spec.window_start = get_instant(window[0], where);
  spec.window_end = get_instant(window[1], where);

  const ojson& groups = field(v, "groups", where);
  if (!groups.is_array()) bad(where, "groups must be an array");
  for (const auto& entry : groups) {
    std::string g_where = where + ".groups";
    if (!entry.is_object()) bad(g_where, "expected an object");
    check_keys(entry, g_where,
               {"label", "count", "activity_rate", "mode_weights",
                "request_type_mix"});
    UserGroup g;
    g.label = get_string(field(entry, "label", g_where), g_where);
    g.count = static_cast<int>(get_integer(field(entry, "count", g_where),
                                           g_where));
    g.activity_rate =
        get_number(field(entry, "activity_rate", g_where), g_where);
    const ojson& modes = field(entry, "mode_weights", g_where);
    if (!modes.is_object()) bad(g_where, "mode_weights must be an object");
    for (const auto& [mode, weight] : modes.items())
      g.mode_weights[mode] = get_number(weight, g_where + ".mode_weights");
    const ojson& mix = field(entry, "request_type_mix", g_where);
    if (!mix.is_object()) bad(g_where, "request_type_mix must be an object");
    for (const auto& [token, weight] : mix.items())
      g.request_type_mix[token] =
          get_number(weight, g_where + ".request_type_mix");
    spec.groups.push_back(std::move(g));
  }

  const ojson& journals = field(v, "journals", where);
  if (!journals.is_array()) bad(where, "journals must be an array");
  for (const auto& entry : journals) {
    std::string j_where = where + ".journals";
    if (!entry.is_object()) bad(j_where, "expected an object");
    check_keys(entry, j_where,
               {"journal_id", "article_count", "pub_start", "pub_end"});
    SynthJournal j;
    j.journal_id = get_string(field(entry, "journal_id", j_where), j_where);
    j.article_count = static_cast<int>(
        get_integer(field(entry, "article_count", j_where), j_where));
    j.pub_start = get_instant(field(entry, "pub_start", j_where), j_where);
    j.pub_end = get_instant(field(entry, "pub_end", j_where), j_where);
    spec.journals.push_back(std::move(j));
  }

  spec.model = parse_model(field(v, "model", where), where + ".model");
  return spec;
}

std::vector<std::vector<std::string>> csv_rows(
    const std::string& text, const std::string& expected_header,
    std::size_t columns, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool saw_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != expected_header)
        throw Error(ErrorCode::ColumnMismatch,
                    what + ": expected header '" + expected_header + "'");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields = csv_split(line);
    if (fields.size() != columns)
      throw Error(ErrorCode::ColumnMismatch,
                  what + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(columns) + " fields, got " +
                      std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  if (!saw_header)
    throw Error(ErrorCode::ColumnMismatch, what + ": empty file");
  return rows;
}

}  // namespace

bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
  auto pop_eq = [](const PopulationSpec& x, const PopulationSpec& y) {
    if (x.window_start != y.window_start || x.window_end != y.window_end ||
        x.seed != y.seed)
      return false;
    if (x.groups.size() != y.groups.size() ||
        x.journals.size() != y.journals.size())
      return false;
    for (std::size_t i = 0; i < x.groups.size(); ++i) {
      const UserGroup& g = x.groups[i];
      const UserGroup& h = y.groups[i];
      if (g.label != h.label || g.count != h.count ||
          g.activity_rate != h.activity_rate ||
          g.mode_weights != h.mode_weights ||
          g.request_type_mix != h.request_type_mix)
        return false;
    }
    for (std::size_t i = 0; i < x.journals.size(); ++i) {
      const SynthJournal& j = x.journals[i];
      const SynthJournal& k = y.journals[i];
      if (j.journal_id != k.journal_id ||
          j.article_count != k.article_count || j.pub_start != k.pub_start ||
          j.pub_end != k.pub_end)
        return false;
    }
    auto model_eq = [](const ObsolescenceModel& m, const ObsolescenceModel& n) {
      if (m.s0 != n.s0 || m.components.size() != n.components.size())
        return false;
      for (std::size_t i = 0; i < m.components.size(); ++i)
        if (m.components[i].label != n.components[i].label ||
            m.components[i].amplitude != n.components[i].amplitude ||
            m.components[i].decay != n.components[i].decay)
          return false;
      return true;
    };
    return model_eq(x.model, y.model);
  };
  auto rules_eq = [](const std::vector<RouteRule>& x,
                     const std::vector<RouteRule>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].pattern != y[i].pattern ||
          !(x[i].request_type == y[i].request_type))
        return false;
    return true;
  };
  return a.seed == b.seed && a.threads == b.threads &&
         a.out_dir == b.out_dir && a.inputs == b.inputs &&
         rules_eq(a.route_map, b.route_map) &&
         a.ingest.only_get_200 == b.ingest.only_get_200 &&
         a.ingest.agent_denylist == b.ingest.agent_denylist &&
         a.ingest.seed == b.ingest.seed &&
         a.session_policy.inactivity_timeout ==
             b.session_policy.inactivity_timeout &&
         a.session_policy.key_fields == b.session_policy.key_fields &&
         a.session_policy.max_session_length ==
             b.session_policy.max_session_length &&
         a.aggregation == b.aggregation && a.fit == b.fit &&
         a.graph == b.graph && a.metrics == b.metrics && a.map == b.map &&
         a.catalog == b.catalog && pop_eq(a.population, b.population);
}

PipelineConfig default_config() {
  PipelineConfig config;
  config.route_map = {
      {"/fulltext/{id}", RequestType::fulltext_download()},
      {"/abstract/{id}", RequestType::abstract_view()},
  };
  config.ingest.seed = config.seed;

  std::int64_t window_start = parse_iso_date("2005-01-01");
  std::int64_t window_end = parse_iso_date("2006-01-01");
  config.aggregation.date_start = window_start;
  config.aggregation.date_end = window_end;

  PopulationSpec& pop = config.population;
  pop.window_start = window_start;
  pop.window_end = window_end;
  pop.seed = config.seed;
  for (int j = 1; j <= 4; ++j) {
    SynthJournal journal;
    journal.journal_id = "j0" + std::to_string(j);
    journal.article_count = 250;
    // Staggered by a few days so no two journals share a publication grid;
    // ties in nearest-article lookups would otherwise favor the first id.
    journal.pub_start = parse_iso_date("1955-01-01") + j * kSecondsPerDay;
    journal.pub_end = parse_iso_date("2004-12-01") + j * 7 * kSecondsPerDay;
    pop.journals.push_back(journal);
  }
  UserGroup readers;
  readers.label = "readers";
  readers.count = 100;
  readers.activity_rate = 3.0;
  readers.mode_weights = mode_weights_from_model(pop.model, 50.0);
  readers.request_type_mix = {{"fulltext_download", 0.7},
                              {"abstract_view", 0.3}};
  pop.groups.push_back(std::move(readers));
  return config;
}

PipelineConfig parse_config(const std::string& json_text) {
  ojson root;
  try {
    root = ojson::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad JSON: ") + e.what());
  }
  if (!root.is_object())
    throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  check_keys(root, "config",
             {"seed", "threads", "out_dir", "inputs", "route_map", "ingest",
              "session_policy", "aggregation", "fit", "graph", "metrics",
              "map", "catalog", "population"});

  PipelineConfig config;
  std::int64_t seed = get_integer(field(root, "seed", "config"), "config.seed");
  config.seed = static_cast<std::uint64_t>(seed);
  config.threads = static_cast<int>(
      get_integer(field(root, "threads", "config"), "config.threads"));
  config.out_dir = get_string(field(root, "out_dir", "config"), "config");

  const ojson& inputs = field(root, "inputs", "config");
  if (!inputs.is_array())
    bad("config.inputs", "expected an array");
  for (const auto& entry : inputs) {
    if (!entry.is_object()) bad("config.inputs", "expected objects");
    check_keys(entry, "config.inputs", {"path", "format"});
    InputSpec spec;
    spec.path = get_string(field(entry, "path", "config.inputs"),
                           "config.inputs.path");
    spec.format = get_string(field(entry, "format", "config.inputs"),
                             "config.inputs.format");
    if (spec.format != "clf" && spec.format != "records" &&
        spec.format != "context_objects" && spec.format != "jr1")
      bad("config.inputs", "unknown format '" + spec.format + "'");
    config.inputs.push_back(std::move(spec));
  }

  const ojson& routes = field(root, "route_map", "config");
  if (!routes.is_array()) bad("config.route_map", "expected an array");
  for (const auto& entry : routes) {
    if (!entry.is_object()) bad("config.route_map", "expected objects");
    check_keys(entry, "config.route_map", {"pattern", "request_type"});
    RouteRule rule;
    rule.pattern = get_string(field(entry, "pattern", "config.route_map"),
                              "config.route_map.pattern");
    try {
      rule.request_type = RequestType::from_token(get_string(
          field(entry, "request_type", "config.route_map"),
          "config.route_map.request_type"));
    } catch (const Error& e) {
      bad("config.route_map", e.what());
    }
    config.route_map.push_back(std::move(rule));
  }

  const ojson& ingest = field(root, "ingest", "config");
  if (!ingest.is_object()) bad("config.ingest", "expected an object");
  check_keys(ingest, "config.ingest", {"only_get_200", "agent_denylist"});
  config.ingest.only_get_200 =
      get_bool(field(ingest, "only_get_200", "config.ingest"),
               "config.ingest");
  const ojson& denylist = field(ingest, "agent_denylist", "config.ingest");
  if (!denylist.is_array()) bad("config.ingest", "agent_denylist array");
  for (const auto& item : denylist)
    config.ingest.agent_denylist.push_back(
        get_string(item, "config.ingest.agent_denylist"));
  config.ingest.seed = config.seed;

  const ojson& session = field(root, "session_policy", "config");
  if (!session.is_object()) bad("config.session_policy", "expected an object");
  check_keys(session, "config.session_policy",
             {"inactivity_timeout", "key_fields", "max_session_length"});
  config.session_policy.inactivity_timeout =
      get_integer(field(session, "inactivity_timeout", "config.session_policy"),
                  "config.session_policy");
  config.session_policy.key_fields.clear();
  const ojson& keys = field(session, "key_fields", "config.session_policy");
  if (!keys.is_array()) bad("config.session_policy", "key_fields array");
  for (const auto& item : keys)
    config.session_policy.key_fields.push_back(
        get_string(item, "config.session_policy.key_fields"));
  config.session_policy.max_session_length = get_integer(
      field(session, "max_session_length", "config.session_policy"),
      "config.session_policy");

  config.aggregation = parse_aggregation(field(root, "aggregation", "config"),
                                         "config.aggregation");

  const ojson& fit = field(root, "fit", "config");
  if (!fit.is_object()) bad("config.fit", "expected an object");
  check_keys(fit, "config.fit",
             {"n_exponentials", "starts", "max_iterations",
              "bin_width_years"});
  config.fit.n_exponentials = static_cast<int>(get_integer(
      field(fit, "n_exponentials", "config.fit"), "config.fit"));
  config.fit.starts = static_cast<int>(
      get_integer(field(fit, "starts", "config.fit"), "config.fit"));
  config.fit.max_iterations = static_cast<int>(get_integer(
      field(fit, "max_iterations", "config.fit"), "config.fit"));
  config.fit.bin_width_years =
      get_number(field(fit, "bin_width_years", "config.fit"), "config.fit");

  const ojson& graph = field(root, "graph", "config");
  if (!graph.is_object()) bad("config.graph", "expected an object");
  check_keys(graph, "config.graph",
             {"level", "directed", "allow_self_pairs",
              "dedup_window_seconds"});
  config.graph.level =
      get_string(field(graph, "level", "config.graph"), "config.graph");
  if (config.graph.level != "article" && config.graph.level != "journal")
    bad("config.graph", "level must be 'article' or 'journal'");
  config.graph.directed =
      get_bool(field(graph, "directed", "config.graph"), "config.graph");
  config.graph.allow_self_pairs = get_bool(
      field(graph, "allow_self_pairs", "config.graph"), "config.graph");
  config.graph.dedup_window_seconds = get_integer(
      field(graph, "dedup_window_seconds", "config.graph"), "config.graph");

  const ojson& metrics = field(root, "metrics", "config");
  if (!metrics.is_object()) bad("config.metrics", "expected an object");
  check_keys(metrics, "config.metrics",
             {"lambda", "tolerance", "max_iterations",
              "eigen_max_iterations"});
  config.metrics.lambda =
      get_number(field(metrics, "lambda", "config.metrics"), "config.metrics");
  config.metrics.tolerance = get_number(
      field(metrics, "tolerance", "config.metrics"), "config.metrics");
  config.metrics.max_iterations = static_cast<int>(get_integer(
      field(metrics, "max_iterations", "config.metrics"), "config.metrics"));
  config.metrics.eigen_max_iterations = static_cast<int>(
      get_integer(field(metrics, "eigen_max_iterations", "config.metrics"),
                  "config.metrics"));

  const ojson& map = field(root, "map", "config");
  if (!map.is_object()) bad("config.map", "expected an object");
  check_keys(map, "config.map", {"clusters", "restarts"});
  config.map.clusters = static_cast<int>(
      get_integer(field(map, "clusters", "config.map"), "config.map"));
  config.map.restarts = static_cast<int>(
      get_integer(field(map, "restarts", "config.map"), "config.map"));

  const ojson& catalog = field(root, "catalog", "config");
  if (!catalog.is_object()) bad("config.catalog", "expected an object");
  check_keys(catalog, "config.catalog",
             {"resources", "journals", "authors", "citations", "countries"});
  config.catalog.resources = get_string(
      field(catalog, "resources", "config.catalog"), "config.catalog");
  config.catalog.journals = get_string(
      field(catalog, "journals", "config.catalog"), "config.catalog");
  config.catalog.authors = get_string(
      field(catalog, "authors", "config.catalog"), "config.catalog");
  config.catalog.citations = get_string(
      field(catalog, "citations", "config.catalog"), "config.catalog");
  config.catalog.countries = get_string(
      field(catalog, "countries", "config.catalog"), "config.catalog");

  config.population = parse_population(field(root, "population", "config"),
                                       "config.population", config.seed);
  return config;
}

std::string render_config(const PipelineConfig& config) {
  ojson root;
  root["seed"] = config.seed;
  root["threads"] = config.threads;
  root["out_dir"] = config.out_dir;

  ojson inputs = ojson::array();
  for (const InputSpec& spec : config.inputs) {
    ojson entry;
    entry["path"] = spec.path;
    entry["format"] = spec.format;
    inputs.push_back(entry);
  }
  root["inputs"] = inputs;

  ojson routes = ojson::array();
  for (const RouteRule& rule : config.route_map) {
    ojson entry;
    entry["pattern"] = rule.pattern;
    entry["request_type"] = rule.request_type.token();
    routes.push_back(entry);
  }
  root["route_map"] = routes;

  ojson ingest;
  ingest["only_get_200"] = config.ingest.only_get_200;
  ingest["agent_denylist"] = ojson(config.ingest.agent_denylist);
  root["ingest"] = ingest;

  ojson session;
  session["inactivity_timeout"] = config.session_policy.inactivity_timeout;
  session["key_fields"] = ojson(config.session_policy.key_fields);
  session["max_session_length"] = config.session_policy.max_session_length;
  root["session_policy"] = session;

  root["aggregation"] = aggregation_json(config.aggregation);

  ojson fit;
  fit["n_exponentials"] = config.fit.n_exponentials;
  fit["starts"] = config.fit.starts;
  fit["max_iterations"] = config.fit.max_iterations;
  fit["bin_width_years"] = config.fit.bin_width_years;
  root["fit"] = fit;

  ojson graph;
  graph["level"] = config.graph.level;
  graph["directed"] = config.graph.directed;
  graph["allow_self_pairs"] = config.graph.allow_self_pairs;
  graph["dedup_window_seconds"] = config.graph.dedup_window_seconds;
  root["graph"] = graph;

  ojson metrics;
  metrics["lambda"] = config.metrics.lambda;
  metrics["tolerance"] = config.metrics.tolerance;
  metrics["max_iterations"] = config.metrics.max_iterations;
  metrics["eigen_max_iterations"] = config.metrics.eigen_max_iterations;
  root["metrics"] = metrics;

  ojson map;
  map["clusters"] = config.map.clusters;
  map["restarts"] = config.map.restarts;
  root["map"] = map;

  ojson catalog;
  catalog["resources"] = config.catalog.resources;
  catalog["journals"] = config.catalog.journals;
  catalog["authors"] = config.catalog.authors;
  catalog["citations"] = config.catalog.citations;
  catalog["countries"] = config.catalog.countries;
  root["catalog"] = catalog;

  root["population"] = population_json(config.population);
  return root.dump(2) + "\n";
}

std::map<std::string, Resource> parse_resources_csv(const std::string& text) {
  std::map<std::string, Resource> out;
  for (const auto& row : csv_rows(
           text,
           "resource_id,journal_id,publication_date,author_count,country,"
           "title",
           6, "resources")) {
    Resource r;
    r.resource_id = row[0];
    r.journal_id = row[1];
    r.publication_date = parse_iso_date(row[2]);
    try {
      r.author_count = std::stoi(row[3]);
    } catch (...) {
      throw Error(ErrorCode::MalformedLine,
                  "resources: bad author_count '" + row[3] + "'");
    }
    r.country = row[4];
    r.title = row[5];
    out[r.resource_id] = std::move(r);
  }
  return out;
}

std::map<std::string, JournalInfo> parse_journals_csv(
    const std::string& text) {
  std::map<std::string, JournalInfo> out;
  for (const auto& row : csv_rows(
           text, "journal_id,title,publisher,platform,print_issn,online_issn",
           6, "journals")) {
    JournalInfo j;
    j.journal_id = row[0];
    j.title = row[1];
    j.publisher = row[2];
    j.platform = row[3];
    j.print_issn = row[4];
    j.online_issn = row[5];
    out[j.journal_id] = std::move(j);
  }
  return out;
}

std::map<std::string, std::vector<std::string>> parse_authors_csv(
    const std::string& text) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& row : csv_rows(text, "author_id,resource_id", 2, "authors"))
    out[row[0]].push_back(row[1]);
  for (auto& [author, articles] : out) {
    std::sort(articles.begin(), articles.end());
    articles.erase(std::unique(articles.begin(), articles.end()),
                   articles.end());
  }
  return out;
}

std::map<std::string, std::string> parse_countries_csv(
    const std::string& text) {
  std::map<std::string, std::string> out;
  for (const auto& row : csv_rows(text, "key,country", 2, "countries"))
    out[row[0]] = row[1];
  return out;
}

std::vector<CitationRecord> parse_citations_csv(const std::string& text) {
  std::vector<CitationRecord> out;
  for (const auto& row :
       csv_rows(text, "cited_resource_id,citing_resource_id,citation_date", 3,
                "citations"))
    out.push_back({row[0], row[1], parse_iso_date(row[2])});
  return out;
}

std::string resources_csv(const std::map<std::string, Resource>& resources) {
  std::ostringstream out;
  out << "resource_id,journal_id,publication_date,author_count,country,title\n";
  for (const auto& [id, r] : resources) {
    out << csv_escape(r.resource_id) << ',' << csv_escape(r.journal_id) << ','
        << format_iso_date(r.publication_date) << ',' << r.author_count << ','
        << csv_escape(r.country) << ',' << csv_escape(r.title) << '\n';
  }
  return out.str();
}

Catalog load_catalog(const CatalogPaths& paths) {
  Catalog catalog;
  if (!paths.resources.empty())
    catalog.resources = parse_resources_csv(read_file(paths.resources));
  if (!paths.journals.empty())
    catalog.journals = parse_journals_csv(read_file(paths.journals));
  if (!paths.authors.empty())
    catalog.author_articles = parse_authors_csv(read_file(paths.authors));
  if (!paths.countries.empty())
    catalog.key_country = parse_countries_csv(read_file(paths.countries));
  return catalog;
}

}  // namespace usemetrics
