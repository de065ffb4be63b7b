#include "usemetrics/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "usemetrics/io_utils.hpp"
#include "usemetrics/rng.hpp"

namespace usemetrics {

namespace {

bool resource_passes(const ResourceFilter& f, const Resource& r) {
  if (f.journal_id.has_value() && r.journal_id != *f.journal_id) return false;
  if (f.publication_window.has_value()) {
    if (r.publication_date < f.publication_window->first ||
        r.publication_date >= f.publication_window->second)
      return false;
  }
  if (f.id_list.has_value()) {
    if (std::find(f.id_list->begin(), f.id_list->end(), r.resource_id) ==
        f.id_list->end())
      return false;
  }
  return true;
}

bool filter_is_active(const ResourceFilter& f) {
  return f.journal_id.has_value() || f.publication_window.has_value() ||
         f.id_list.has_value();
}

double event_weight(const AggregationParams& params, const UsageEvent& e) {
  if (params.type_weights.empty()) return 1.0;
  auto it = params.type_weights.find(e.request_type.token());
  if (it == params.type_weights.end()) return 1.0;
  if (it->second < 0.0)
    throw Error(ErrorCode::InvalidConfig,
                "negative request-type weight for " + it->first);
  return it->second;
}

const std::string& event_actor(const UsageEvent& e) {
  return e.user_id.empty() ? e.session_id : e.user_id;
}

}  // namespace

UsageStatistic aggregate(const std::vector<UsageEvent>& events,
                         const Referent& referent,
                         const AggregationParams& params,
                         const Catalog& catalog) {
  if (params.date_start > params.date_end)
    throw Error(ErrorCode::EmptyDateRange, "date range start after end");

  // Resolve the referent up front so an unresolvable key fails loudly even
  // on an empty log.
  const std::vector<std::string>* author_set = nullptr;
  switch (referent.kind) {
    case ReferentKind::Resource:
      if (catalog.resources.count(referent.key) == 0)
        throw Error(ErrorCode::UnknownReferent,
                    "resource not in catalog: " + referent.key);
      break;
    case ReferentKind::Journal:
      if (!catalog.knows_journal(referent.key))
        throw Error(ErrorCode::UnknownReferent,
                    "journal not in catalog: " + referent.key);
      break;
    case ReferentKind::Author: {
      auto it = catalog.author_articles.find(referent.key);
      if (it == catalog.author_articles.end())
        throw Error(ErrorCode::UnknownReferent,
                    "author not in catalog: " + referent.key);
      author_set = &it->second;
      break;
    }
    case ReferentKind::Country:
      if (catalog.key_country.empty())
        throw Error(ErrorCode::UnknownReferent,
                    "no key->country table to resolve " + referent.key);
      break;
  }

  auto attributed = [&](const UsageEvent& e, const Resource* res) -> bool {
    switch (referent.kind) {
      case ReferentKind::Resource:
        return e.resource_id == referent.key;
      case ReferentKind::Journal:
        return res != nullptr && res->journal_id == referent.key;
      case ReferentKind::Author:
        return res != nullptr &&
               std::binary_search(author_set->begin(), author_set->end(),
                                  e.resource_id);
      case ReferentKind::Country: {
        const std::string& actor = event_actor(e);
        if (actor.empty()) return false;
        auto it = catalog.key_country.find(actor);
        return it != catalog.key_country.end() && it->second == referent.key;
      }
    }
    return false;
  };

  std::vector<UsageEvent> pool = filter_events(events, params.user_filter);

  double total = 0.0;
  bool need_resource = filter_is_active(params.resource_filter) ||
                       referent.kind != ReferentKind::Country ||
                       params.normalization == Normalization::PerAuthor;
  for (const UsageEvent& e : pool) {
    if (e.timestamp < params.date_start || e.timestamp >= params.date_end)
      continue;
    if (params.request_type_filter.has_value()) {
      bool found = false;
      for (const RequestType& rt : *params.request_type_filter)
        if (rt == e.request_type) {
          found = true;
          break;
        }
      if (!found) continue;
    }
    const Resource* res = nullptr;
    auto rit = catalog.resources.find(e.resource_id);
    if (rit != catalog.resources.end()) res = &rit->second;
    if (need_resource && res == nullptr &&
        referent.kind != ReferentKind::Country)
      continue;  // unattributable without catalog entry
    if (filter_is_active(params.resource_filter)) {
      if (res == nullptr || !resource_passes(params.resource_filter, *res))
        continue;
    }
    if (!attributed(e, res)) continue;
    double w = event_weight(params, e);
    if (params.normalization == Normalization::PerAuthor) {
      if (res == nullptr) continue;  // author count unknowable
      w /= static_cast<double>(res->author_count);
    }
    total += w;
  }

  double value = total;
  if (params.normalization == Normalization::PerArticle) {
    long denom = 0;
    for (const auto& [id, res] : catalog.resources) {
      if (filter_is_active(params.resource_filter) &&
          !resource_passes(params.resource_filter, res))
        continue;
      switch (referent.kind) {
        case ReferentKind::Resource:
          if (res.resource_id == referent.key) ++denom;
          break;
        case ReferentKind::Journal:
          if (res.journal_id == referent.key) ++denom;
          break;
        case ReferentKind::Author:
          if (std::binary_search(author_set->begin(), author_set->end(),
                                 res.resource_id))
            ++denom;
          break;
        case ReferentKind::Country:
          ++denom;  // the event-side country does not restrict resources
          break;
      }
    }
    value = denom == 0 ? 0.0 : total / static_cast<double>(denom);
  }

  UsageStatistic stat;
  stat.referent = referent.key;
  stat.value = value;
  stat.params = params;
  stat.produced_at = params.date_end;
  return stat;
}

std::optional<UsageStatistic> usage_impact_factor(
    const std::vector<UsageEvent>& events, const std::string& journal,
    int census_year, const Catalog& catalog) {
  AggregationParams params;
  params.date_start = month_start(census_year, 1);
  params.date_end = month_start(census_year + 1, 1);
  params.resource_filter.journal_id = journal;
  params.resource_filter.publication_window = {
      month_start(census_year - 2, 1), month_start(census_year, 1)};
  params.normalization = Normalization::PerArticle;

  long window_articles = 0;
  for (const auto& [id, res] : catalog.resources)
    if (resource_passes(params.resource_filter, res)) ++window_articles;
  if (window_articles == 0) return std::nullopt;  // NoArticlesInWindow

  return aggregate(events, {ReferentKind::Journal, journal}, params, catalog);
}

std::string write_counter_jr1(const std::vector<UsageEvent>& events,
                              const Catalog& catalog, int year) {
  std::int64_t year_start = month_start(year, 1);
  std::int64_t year_end = month_start(year + 1, 1);

  std::map<std::string, std::array<std::int64_t, 12>> counts;
  for (const UsageEvent& e : events) {
    if (e.timestamp < year_start || e.timestamp >= year_end) continue;
    auto rit = catalog.resources.find(e.resource_id);
    if (rit == catalog.resources.end())
      throw Error(ErrorCode::MissingJournalMetadata,
                  "no catalog entry resolves a journal for resource " +
                      e.resource_id);
    const std::string& journal = rit->second.journal_id;
    auto& months = counts[journal];  // row exists for any event in the year
    if (e.request_type.kind != RequestKind::FullTextDownload) continue;
    int y = 0, m = 0;
    year_month_of(e.timestamp, y, m);
    ++months[static_cast<std::size_t>(m - 1)];
  }

  std::vector<JournalMonthlyUsage> rows;
  rows.reserve(counts.size());
  for (const auto& [journal, months] : counts) {
    auto jit = catalog.journals.find(journal);
    if (jit == catalog.journals.end())
      throw Error(ErrorCode::MissingJournalMetadata,
                  "no metadata for journal " + journal);
    JournalMonthlyUsage r;
    r.journal_title = jit->second.title;
    r.publisher = jit->second.publisher;
    r.platform = jit->second.platform;
    r.print_issn = jit->second.print_issn;
    r.online_issn = jit->second.online_issn;
    r.months = months;
    r.ytd = 0;
    for (std::int64_t v : months) r.ytd += v;
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(),
            [](const JournalMonthlyUsage& a, const JournalMonthlyUsage& b) {
              if (a.journal_title != b.journal_title)
                return a.journal_title < b.journal_title;
              return a.online_issn < b.online_issn;
            });
  return write_counter_jr1_rows(rows);
}

std::string write_counter_jr1_rows(
    const std::vector<JournalMonthlyUsage>& rows) {
  std::ostringstream out;
  out << "Journal,Publisher,Platform,Print ISSN,Online ISSN,"
         "Jan,Feb,Mar,Apr,May,Jun,Jul,Aug,Sep,Oct,Nov,Dec,YTD Total\n";
  for (const JournalMonthlyUsage& r : rows) {
    std::vector<std::string> fields = {r.journal_title, r.publisher,
                                       r.platform, r.print_issn,
                                       r.online_issn};
    for (std::int64_t v : r.months) fields.push_back(std::to_string(v));
    fields.push_back(std::to_string(r.ytd));
    out << csv_join(fields) << '\n';
  }
  return out.str();
}

ReadCitePoint read_cite_point(const std::vector<UsageEvent>& events,
                              const std::vector<CitationRecord>& citations,
                              const std::string& author, std::int64_t as_of,
                              double window_years, const Catalog& catalog) {
  auto ait = catalog.author_articles.find(author);
  if (ait == catalog.author_articles.end())
    throw Error(ErrorCode::UnknownAuthor, "author not in catalog: " + author);
  if (window_years <= 0.0)
    throw Error(ErrorCode::InvalidConfig, "window_years must be positive");

  std::int64_t window_start =
      as_of - static_cast<std::int64_t>(window_years * kSecondsPerYear);
  std::int64_t ten_years_ago =
      as_of - static_cast<std::int64_t>(10.0 * kSecondsPerYear);

  struct PerArticle {
    double author_count = 1.0;
    std::int64_t publication_date = 0;
    long reads = 0;
    long cites = 0;
  };
  std::map<std::string, PerArticle> articles;
  for (const std::string& id : ait->second) {
    auto rit = catalog.resources.find(id);
    if (rit == catalog.resources.end())
      throw Error(ErrorCode::MissingPublicationDate,
                  "author article not in catalog: " + id);
    articles[id] = {static_cast<double>(rit->second.author_count),
                    rit->second.publication_date, 0, 0};
  }
  for (const UsageEvent& e : events) {
    auto it = articles.find(e.resource_id);
    if (it == articles.end()) continue;
    if (e.timestamp >= window_start && e.timestamp < as_of) ++it->second.reads;
  }
  for (const CitationRecord& c : citations) {
    auto it = articles.find(c.cited_resource_id);
    if (it == articles.end()) continue;
    if (c.citation_date < as_of) ++it->second.cites;
  }

  ReadCitePoint point;
  point.author_id = author;
  for (const auto& [id, a] : articles) {
    double read_share = static_cast<double>(a.reads) / a.author_count;
    point.usage_rate += read_share / window_years;
    point.total_citations += static_cast<double>(a.cites) / a.author_count;
    if (a.publication_date >= ten_years_ago)
      point.read10 += read_share / window_years;
  }
  return point;
}

PowerLawFit fit_power_law(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw Error(ErrorCode::InsufficientData,
                "power-law fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  std::vector<std::pair<double, double>> logs;
  logs.reserve(points.size());
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw Error(ErrorCode::NonPositiveInput,
                  "power-law fit requires strictly positive points");
    logs.emplace_back(std::log(x), std::log(y));
  }
  for (const auto& [lx, ly] : logs) {
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1.0;
  }
  double det = n * sxx - sx * sx;
  double spread = sxx / n - (sx / n) * (sx / n);
  if (spread <= 1e-24)
    throw Error(ErrorCode::DegenerateInput, "all x values coincide");
  PowerLawFit fit;
  fit.exponent = (n * sxy - sx * sy) / det;
  double intercept = (sy - fit.exponent * sx) / n;
  fit.amplitude = std::exp(intercept);

  double mean_y = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (const auto& [lx, ly] : logs) {
    double pred = intercept + fit.exponent * lx;
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - mean_y) * (ly - mean_y);
  }
  fit.r_squared = ss_tot <= 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

std::string params_digest(const AggregationParams& params) {
  // Canonical text rendering of every field; the digest is stable across
  // runs because the rendering is.
  std::ostringstream s;
  s << params.date_start << '|' << params.date_end << '|';
  if (params.request_type_filter.has_value()) {
    for (const RequestType& rt : *params.request_type_filter)
      s << rt.token() << ',';
  } else {
    s << '*';
  }
  s << '|';
  const ResourceFilter& rf = params.resource_filter;
  s << (rf.journal_id ? *rf.journal_id : "*") << '|';
  if (rf.publication_window)
    s << rf.publication_window->first << ':' << rf.publication_window->second;
  else
    s << '*';
  s << '|';
  if (rf.id_list) {
    for (const std::string& id : *rf.id_list) s << id << ',';
  } else {
    s << '*';
  }
  s << '|';
  const UserFilter& uf = params.user_filter;
  s << (uf.min_monthly_requests ? std::to_string(*uf.min_monthly_requests)
                                : "*")
    << '|' << (uf.full_text_only ? 'F' : '-') << '|';
  if (uf.request_type_in) {
    for (const RequestType& rt : *uf.request_type_in) s << rt.token() << ',';
  } else {
    s << '*';
  }
  s << '|' << static_cast<int>(params.normalization) << '|';
  for (const auto& [token, weight] : params.type_weights)
    s << token << '=' << format_double(weight) << ',';
  return hex64(fnv1a64(s.str()));
}

std::string statistic_line(const UsageStatistic& stat) {
  return stat.referent + "\t" + format_double(stat.value) + "\t" +
         params_digest(stat.params);
}

}  // namespace usemetrics
