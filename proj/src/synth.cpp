#include "usemetrics/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "usemetrics/io_utils.hpp"
#include "usemetrics/rng.hpp"
#include "usemetrics/time_utils.hpp"

namespace usemetrics {

namespace {

constexpr int kMaxEventsPerSession = 64;
constexpr std::int64_t kMinGap = 30;
constexpr std::int64_t kMaxGap = 300;
// Session start offset stays within 18h of the day start so a full session
// (64 events, 300 s gaps) ends comfortably before the next day's earliest
// session. That keeps same-user sessions far apart in time.
constexpr std::int64_t kStartSpread = 18 * 3600;

const std::vector<std::string> kModes = {"N", "C", "I", "H", "S"};

double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Knuth's product-of-uniforms sampler: exact and portable for the small
// per-day rates used here.
int poisson(std::mt19937_64& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  double limit = std::exp(-lambda);
  double product = 1.0;
  int k = 0;
  while (true) {
    product *= unit_interval(rng);
    if (product <= limit) return k;
    ++k;
    if (k > 100000)
      throw Error(ErrorCode::InvalidSpec, "activity_rate too large");
  }
}

int pick_weighted(std::mt19937_64& rng, const std::vector<double>& weights,
                  double total) {
  double target = unit_interval(rng) * total;
  double cumulative = 0.0;
  int chosen = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    chosen = static_cast<int>(i);
    if (cumulative > target) break;
  }
  return chosen;
}

struct ArticleTable {
  std::vector<Resource> resources;       // sorted by publication date
  std::vector<std::int64_t> pub_dates;   // parallel to resources
  std::vector<double> citation_weights;  // cumulative, parallel
  double citation_total = 0.0;

  // Index of the last article published at or before `at`; -1 if none.
  std::ptrdiff_t last_published(std::int64_t at) const {
    auto it = std::upper_bound(pub_dates.begin(), pub_dates.end(), at);
    return static_cast<std::ptrdiff_t>(it - pub_dates.begin()) - 1;
  }

  // Article whose publication date is closest to `target`, preferring
  // dates at or before `at` when any exist.
  std::size_t nearest(std::int64_t target, std::int64_t at) const {
    std::ptrdiff_t hi = last_published(at);
    if (hi < 0) return 0;
    auto end = pub_dates.begin() + hi + 1;
    auto it = std::lower_bound(pub_dates.begin(), end, target);
    if (it == end) return static_cast<std::size_t>(hi);
    if (it == pub_dates.begin())
      return 0;
    std::int64_t after = *it - target;
    std::int64_t before = target - *(it - 1);
    return static_cast<std::size_t>(before <= after ? (it - 1) - pub_dates.begin()
                                                    : it - pub_dates.begin());
  }
};

ArticleTable build_articles(const PopulationSpec& spec) {
  ArticleTable table;
  for (const SynthJournal& journal : spec.journals) {
    for (int k = 0; k < journal.article_count; ++k) {
      Resource r;
      r.resource_id = journal.journal_id + "-a" + std::to_string(k + 1);
      r.journal_id = journal.journal_id;
      if (journal.article_count == 1) {
        r.publication_date = journal.pub_start;
      } else {
        double fraction = static_cast<double>(k) /
                          static_cast<double>(journal.article_count - 1);
        r.publication_date =
            journal.pub_start +
            static_cast<std::int64_t>(std::llround(
                fraction * static_cast<double>(journal.pub_end -
                                               journal.pub_start)));
      }
      r.title = r.resource_id;
      table.resources.push_back(std::move(r));
    }
  }
  std::stable_sort(table.resources.begin(), table.resources.end(),
                   [](const Resource& a, const Resource& b) {
                     if (a.publication_date != b.publication_date)
                       return a.publication_date < b.publication_date;
                     return a.resource_id < b.resource_id;
                   });
  table.pub_dates.reserve(table.resources.size());
  for (const Resource& r : table.resources)
    table.pub_dates.push_back(r.publication_date);

  // Static citation counts by preferential attachment: an urn starting with
  // one ball per article, each draw duplicating the drawn article's ball.
  std::mt19937_64 rng(derive_seed(spec.seed, "synth_citations"));
  std::size_t n = table.resources.size();
  std::vector<std::uint32_t> urn(n);
  for (std::size_t i = 0; i < n; ++i) urn[i] = static_cast<std::uint32_t>(i);
  std::vector<double> counts(n, 1.0);
  std::size_t draws = 10 * n;
  for (std::size_t d = 0; d < draws; ++d) {
    std::size_t pick = static_cast<std::size_t>(
        unit_interval(rng) * static_cast<double>(urn.size()));
    if (pick >= urn.size()) pick = urn.size() - 1;
    std::uint32_t article = urn[pick];
    urn.push_back(article);
    counts[article] += 1.0;
  }
  table.citation_weights.resize(n);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cumulative += counts[i];
    table.citation_weights[i] = cumulative;
  }
  table.citation_total = cumulative;
  return table;
}

double decay_of(const ObsolescenceModel& model, char label,
                double fallback) {
  for (const ModelComponent& c : model.components)
    if (c.label == label && c.decay > 0.0) return c.decay;
  return fallback;
}

std::string model_text(const ObsolescenceModel& model) {
  std::ostringstream out;
  bool first = true;
  for (const ModelComponent& c : model.components) {
    if (!first) out << ';';
    first = false;
    out << c.label << ':' << format_double(c.amplitude) << ':'
        << format_double(c.decay);
  }
  if (model.s0.has_value()) {
    if (!first) out << ';';
    out << "S:" << format_double(*model.s0);
  }
  return out.str();
}

}  // namespace

void check_spec(const PopulationSpec& spec) {
  if (spec.window_start >= spec.window_end)
    throw Error(ErrorCode::InvalidSpec, "window must be non-empty");
  if (spec.groups.empty())
    throw Error(ErrorCode::InvalidSpec, "no user groups");
  check_model(spec.model);

  long total_articles = 0;
  for (const SynthJournal& journal : spec.journals) {
    if (journal.journal_id.empty())
      throw Error(ErrorCode::InvalidSpec, "journal without id");
    if (journal.article_count < 0)
      throw Error(ErrorCode::InvalidSpec,
                  "negative article count in " + journal.journal_id);
    if (journal.pub_start > journal.pub_end)
      throw Error(ErrorCode::InvalidSpec,
                  "publication range inverted in " + journal.journal_id);
    total_articles += journal.article_count;
  }

  for (const UserGroup& group : spec.groups) {
    if (group.label.empty())
      throw Error(ErrorCode::InvalidSpec, "group without label");
    if (group.count < 0)
      throw Error(ErrorCode::InvalidSpec,
                  "negative user count in group " + group.label);
    if (!(group.activity_rate >= 0.0))
      throw Error(ErrorCode::InvalidSpec,
                  "negative activity rate in group " + group.label);
    double sum = 0.0;
    for (const auto& [mode, weight] : group.mode_weights) {
      if (std::find(kModes.begin(), kModes.end(), mode) == kModes.end())
        throw Error(ErrorCode::InvalidSpec,
                    "unknown mode '" + mode + "' in group " + group.label);
      if (!(weight >= 0.0))
        throw Error(ErrorCode::InvalidSpec,
                    "negative mode weight in group " + group.label);
      sum += weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidSpec,
                  "mode weights of group " + group.label +
                      " sum to " + format_double(sum) + ", expected 1");
    for (const auto& [token, weight] : group.request_type_mix) {
      // Unlisted tokens are fine (they become Other types), but the token
      // must survive the tab-separated record format.
      if (token.empty() ||
          token.find_first_of("\t\r\n") != std::string::npos)
        throw Error(ErrorCode::InvalidSpec,
                    "unusable request-type token in group " + group.label);
      if (!(weight >= 0.0))
        throw Error(ErrorCode::InvalidSpec,
                    "negative request-type weight in group " + group.label);
    }
    if (group.count > 0 && group.activity_rate > 0.0 && total_articles == 0)
      throw Error(ErrorCode::InvalidSpec,
                  "active users but no articles to request");
  }
}

SynthResult generate_log(const PopulationSpec& spec) {
  check_spec(spec);
  ArticleTable articles = build_articles(spec);

  double k_c = decay_of(spec.model, 'C', 0.4);
  double k_i = decay_of(spec.model, 'I', 0.065);

  SynthResult result;
  result.model = spec.model;
  result.resources = articles.resources;

  std::vector<std::pair<UsageEvent, GroundTruthRow>> stream;
  for (const UserGroup& group : spec.groups) {
    std::vector<double> mode_weights(kModes.size(), 0.0);
    double mode_total = 0.0;
    for (std::size_t m = 0; m < kModes.size(); ++m) {
      auto it = group.mode_weights.find(kModes[m]);
      if (it == group.mode_weights.end()) continue;
      mode_weights[m] = it->second;
      mode_total += it->second;
    }

    std::vector<std::string> type_tokens;
    std::vector<double> type_weights;
    double type_total = 0.0;
    for (const auto& [token, weight] : group.request_type_mix) {
      if (weight <= 0.0) continue;
      type_tokens.push_back(token);
      type_weights.push_back(weight);
      type_total += weight;
    }
    if (type_tokens.empty()) {
      type_tokens.push_back("fulltext_download");
      type_weights.push_back(1.0);
      type_total = 1.0;
    }

    for (int u = 0; u < group.count; ++u) {
      std::string user_id =
          "u-" + group.label + "-" + std::to_string(u + 1);
      std::mt19937_64 rng(derive_seed(spec.seed, "synth_user_" + user_id));

      int day_index = 0;
      for (std::int64_t day = spec.window_start; day < spec.window_end;
           day += kSecondsPerDay, ++day_index) {
        int n_events = poisson(rng, group.activity_rate);
        if (n_events == 0) continue;
        n_events = std::min(n_events, kMaxEventsPerSession);

        std::string session_id =
            "t-" + user_id + "-" + std::to_string(day_index);
        std::int64_t t =
            day + static_cast<std::int64_t>(unit_interval(rng) *
                                            static_cast<double>(kStartSpread));
        for (int e = 0; e < n_events; ++e) {
          if (e > 0)
            t += kMinGap + static_cast<std::int64_t>(
                               unit_interval(rng) *
                               static_cast<double>(kMaxGap - kMinGap + 1));
          if (t >= spec.window_end) break;

          std::size_t mode_index = mode_total > 0.0
                                       ? static_cast<std::size_t>(pick_weighted(
                                             rng, mode_weights, mode_total))
                                       : 3;  // all-H fallback
          const std::string& mode = kModes[mode_index];

          std::size_t article;
          if (mode == "N") {
            article = articles.nearest(t, t);
          } else if (mode == "C" || mode == "I") {
            double rate = mode == "C" ? k_c : k_i;
            double age_years =
                -std::log(1.0 - unit_interval(rng)) / rate;
            std::int64_t target =
                t - static_cast<std::int64_t>(age_years * kSecondsPerYear);
            article = articles.nearest(target, t);
          } else if (mode == "H") {
            std::ptrdiff_t hi = articles.last_published(t);
            if (hi < 0) {
              article = 0;
            } else {
              article = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
                  hi, static_cast<std::ptrdiff_t>(
                          unit_interval(rng) * static_cast<double>(hi + 1))));
            }
          } else {  // S: static citation-proportional weights
            double target =
                unit_interval(rng) * articles.citation_total;
            auto it = std::upper_bound(articles.citation_weights.begin(),
                                       articles.citation_weights.end(),
                                       target);
            article = std::min<std::size_t>(
                static_cast<std::size_t>(it -
                                         articles.citation_weights.begin()),
                articles.resources.size() - 1);
          }

          int type_index =
              pick_weighted(rng, type_weights, type_total);
          UsageEvent event;
          event.event_id = uuid_from(rng);
          event.user_id = user_id;
          event.request_type = RequestType::from_token(
              type_tokens[static_cast<std::size_t>(type_index)]);
          event.resource_id = articles.resources[article].resource_id;
          event.timestamp = t;

          GroundTruthRow row;
          row.event_id = event.event_id;
          row.true_session_id = session_id;
          row.user_id = user_id;
          row.mode = mode;
          stream.emplace_back(std::move(event), std::move(row));
        }
      }
    }
  }

  std::stable_sort(stream.begin(), stream.end(),
                   [](const auto& a, const auto& b) {
                     return event_order_lt(a.first, b.first);
                   });
  result.events.reserve(stream.size());
  result.truth.reserve(stream.size());
  for (auto& [event, row] : stream) {
    result.events.push_back(std::move(event));
    result.truth.push_back(std::move(row));
  }
  return result;
}

std::map<std::string, double> mode_weights_from_model(
    const ObsolescenceModel& model, double archive_years) {
  if (!(archive_years > 0.0))
    throw Error(ErrorCode::InvalidSpec, "archive depth must be positive");
  std::map<std::string, double> weights;
  double total = 0.0;
  for (const ModelComponent& c : model.components) {
    double mass =
        c.decay > 0.0 ? c.amplitude / c.decay : c.amplitude * archive_years;
    weights[std::string(1, c.label)] = mass;
    total += mass;
  }
  if (total <= 0.0)
    throw Error(ErrorCode::InvalidSpec, "model has no event mass");
  for (auto& [mode, weight] : weights) weight /= total;
  return weights;
}

std::string ground_truth_csv(const SynthResult& result, std::uint64_t seed) {
  std::ostringstream out;
  out << "# true_model: " << model_text(result.model) << '\n';
  out << "# seed: " << seed << '\n';
  out << "event_id,true_session_id,user_id,mode\n";
  for (const GroundTruthRow& row : result.truth) {
    out << csv_escape(row.event_id) << ',' << csv_escape(row.true_session_id)
        << ',' << csv_escape(row.user_id) << ',' << row.mode << '\n';
  }
  return out.str();
}

GroundTruth parse_ground_truth(const std::string& csv) {
  GroundTruth truth;
  std::istringstream in(csv);
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t colon = line.find(':');
      if (colon != std::string::npos && colon > 2) {
        std::string value = line.substr(colon + 1);
        if (!value.empty() && value[0] == ' ') value.erase(0, 1);
        truth.metadata[line.substr(2, colon - 2)] = value;
      }
      continue;
    }
    std::vector<std::string> fields = csv_split(line);
    if (!saw_header) {
      if (fields.size() != 4 || fields[0] != "event_id")
        throw Error(ErrorCode::ColumnMismatch,
                    "unexpected ground-truth header");
      saw_header = true;
      continue;
    }
    if (fields.size() != 4)
      throw Error(ErrorCode::ColumnMismatch,
                  "ground-truth row needs 4 fields");
    truth.rows.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  if (!saw_header)
    throw Error(ErrorCode::ColumnMismatch, "empty ground-truth file");
  return truth;
}

}  // namespace usemetrics
