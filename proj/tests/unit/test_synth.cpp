#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support/helpers.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/ingest.hpp"
#include "usemetrics/obsolescence.hpp"
#include "usemetrics/synth.hpp"
#include "usemetrics/time_utils.hpp"

using namespace usemetrics;
using testutil::code_of;

namespace {

PopulationSpec small_spec() {
  PopulationSpec spec;
  spec.window_start = parse_iso_date("2005-03-01");
  spec.window_end = spec.window_start + 30 * kSecondsPerDay;
  spec.seed = 777;
  spec.journals = {
      {"jA", 40, parse_iso_date("1980-01-01"), parse_iso_date("2004-12-01")},
      {"jB", 25, parse_iso_date("1990-01-01"), parse_iso_date("2004-06-01")},
  };
  UserGroup readers;
  readers.label = "readers";
  readers.count = 12;
  readers.mode_weights = {{"C", 0.4}, {"I", 0.3}, {"H", 0.2}, {"N", 0.1}};
  readers.activity_rate = 2.0;
  spec.groups = {readers};
  return spec;
}

}  // namespace

TEST_CASE("check_spec names the first violated invariant") {
  CHECK(code_of([] { check_spec(small_spec()); }) == std::nullopt);

  PopulationSpec bad = small_spec();
  bad.window_end = bad.window_start;
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups.clear();
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups[0].mode_weights["C"] = 0.9;  // sum now 1.5
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups[0].mode_weights = {{"Q", 1.0}};
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups[0].mode_weights = {{"C", 1.2}, {"H", -0.2}};
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups[0].count = -1;
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups[0].request_type_mix = {{"", 1.0}};
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.groups[0].request_type_mix = {{"tab\tby", 1.0}};
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  // Unlisted tokens are legitimate Other types, not errors.
  bad = small_spec();
  bad.groups[0].request_type_mix = {{"peer_review", 1.0}};
  CHECK(code_of([&] { check_spec(bad); }) == std::nullopt);

  bad = small_spec();
  bad.journals.clear();
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);

  bad = small_spec();
  bad.journals[0].pub_start = bad.journals[0].pub_end + 1;
  CHECK(code_of([&] { check_spec(bad); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("generate_log is a pure function of its spec") {
  PopulationSpec spec = small_spec();
  SynthResult a = generate_log(spec);
  SynthResult b = generate_log(spec);

  REQUIRE(a.events.size() == b.events.size());
  CHECK(a.events.size() > 400);  // 12 users * 2/day * 30 days
  for (std::size_t i = 0; i < a.events.size(); ++i)
    CHECK(a.events[i] == b.events[i]);
  CHECK(ground_truth_csv(a, spec.seed) == ground_truth_csv(b, spec.seed));

  SUBCASE("a different seed moves the stream") {
    spec.seed = 778;
    SynthResult c = generate_log(spec);
    CHECK(ground_truth_csv(c, spec.seed) != ground_truth_csv(a, 777));
  }

  SUBCASE("events arrive merged by time with empty session ids") {
    CHECK(std::is_sorted(a.events.begin(), a.events.end(),
                         [](const UsageEvent& x, const UsageEvent& y) {
                           return event_order_lt(x, y);
                         }));
    for (const UsageEvent& e : a.events) CHECK(e.session_id.empty());
  }

  SUBCASE("every requested resource exists in the catalog") {
    std::set<std::string> known;
    for (const Resource& r : a.resources) {
      CHECK((r.journal_id == "jA" || r.journal_id == "jB"));
      known.insert(r.resource_id);
    }
    CHECK(known.size() == 65);  // 40 + 25, unique ids
    for (const UsageEvent& e : a.events)
      CHECK(known.count(e.resource_id) == 1);
  }
}

TEST_CASE("true sessions have browsing shape") {
  SynthResult result = generate_log(small_spec());
  REQUIRE(result.truth.size() == result.events.size());

  struct Span {
    std::string user;
    std::vector<std::int64_t> times;
  };
  std::map<std::string, Span> sessions;
  for (std::size_t i = 0; i < result.events.size(); ++i) {
    Span& span = sessions[result.truth[i].true_session_id];
    if (span.times.empty()) {
      span.user = result.truth[i].user_id;
    } else {
      CHECK(span.user == result.truth[i].user_id);
    }
    span.times.push_back(result.events[i].timestamp);
  }

  std::map<std::string, std::vector<std::pair<std::int64_t, std::int64_t>>>
      per_user;
  for (auto& [sid, span] : sessions) {
    CHECK(span.times.size() <= 64);
    std::sort(span.times.begin(), span.times.end());
    for (std::size_t i = 1; i < span.times.size(); ++i) {
      std::int64_t gap = span.times[i] - span.times[i - 1];
      CHECK(gap >= 30);
      CHECK(gap <= 300);
    }
    per_user[span.user].push_back({span.times.front(), span.times.back()});
  }
  for (auto& [user, spans] : per_user) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
      // Different sittings are separated by far more than any in-session gap.
      CHECK(spans[i].first - spans[i - 1].second > 300);
  }
}

TEST_CASE("sessionizing on the user key recovers the true partition") {
  SynthResult result = generate_log(small_spec());

  std::vector<std::string> keys;
  keys.reserve(result.events.size());
  for (const UsageEvent& e : result.events) keys.push_back(e.user_id);

  SessionizationPolicy policy;
  policy.inactivity_timeout = 600;
  policy.max_session_length = 86400;
  std::vector<UsageEvent> cut = sessionize(result.events, keys, policy, 5);

  std::map<std::string, std::vector<std::string>> recovered, truth;
  for (const UsageEvent& e : cut) recovered[e.session_id].push_back(e.event_id);
  for (std::size_t i = 0; i < result.truth.size(); ++i)
    truth[result.truth[i].true_session_id].push_back(
        result.events[i].event_id);

  std::set<std::vector<std::string>> lhs, rhs;
  for (auto& [sid, ids] : recovered) {
    std::sort(ids.begin(), ids.end());
    lhs.insert(ids);
  }
  for (auto& [sid, ids] : truth) {
    std::sort(ids.begin(), ids.end());
    rhs.insert(ids);
  }
  CHECK(lhs == rhs);
}

TEST_CASE("group activity rates land where aimed") {
  PopulationSpec spec;
  spec.window_start = parse_iso_date("2005-01-01");
  spec.window_end = spec.window_start + 90 * kSecondsPerDay;
  spec.seed = 31;
  spec.journals = {
      {"j1", 60, parse_iso_date("1995-01-01"), parse_iso_date("2004-12-01")}};
  UserGroup heavy, light;
  heavy.label = "heavy";
  heavy.count = 10;
  heavy.mode_weights = {{"C", 1.0}};
  heavy.activity_rate = 6.0;
  light.label = "light";
  light.count = 40;
  light.mode_weights = {{"H", 1.0}};
  light.activity_rate = 1.0;
  spec.groups = {heavy, light};

  SynthResult result = generate_log(spec);
  long heavy_events = 0, light_events = 0;
  for (const UsageEvent& e : result.events) {
    if (e.user_id.rfind("u-heavy-", 0) == 0) ++heavy_events;
    if (e.user_id.rfind("u-light-", 0) == 0) ++light_events;
  }
  CHECK(heavy_events + light_events == static_cast<long>(result.events.size()));
  // Poisson totals: 10*6*90 = 5400 and 40*1*90 = 3600, three sigma wide.
  CHECK(heavy_events > 5400 - 3 * 74);
  CHECK(heavy_events < 5400 + 3 * 74);
  CHECK(light_events > 3600 - 3 * 60);
  CHECK(light_events < 3600 + 3 * 60);
}

TEST_CASE("modes follow their weights") {
  PopulationSpec spec = small_spec();
  spec.groups[0].count = 20;
  spec.groups[0].activity_rate = 4.0;
  spec.groups[0].mode_weights = {{"C", 0.5}, {"H", 0.5}};
  spec.window_end = spec.window_start + 60 * kSecondsPerDay;

  SynthResult result = generate_log(spec);
  std::map<std::string, long> by_mode;
  for (const GroundTruthRow& row : result.truth) by_mode[row.mode] += 1;
  CHECK(by_mode.count("N") == 0);
  CHECK(by_mode.count("I") == 0);
  CHECK(by_mode.count("S") == 0);
  double total = static_cast<double>(result.truth.size());
  CHECK(by_mode["C"] / total == doctest::Approx(0.5).epsilon(0.06));
  CHECK(by_mode["H"] / total == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("archive browsing alone produces a flat ageing curve") {
  PopulationSpec spec;
  spec.window_start = parse_iso_date("2005-01-01");
  spec.window_end = parse_iso_date("2006-01-01");
  spec.seed = 404;
  spec.journals = {
      {"deep1", 600, parse_iso_date("1950-01-01"), parse_iso_date("2004-12-01")},
      {"deep2", 600, parse_iso_date("1950-06-01"), parse_iso_date("2004-06-01")},
  };
  UserGroup browsers;
  browsers.label = "hist";
  browsers.count = 120;
  browsers.mode_weights = {{"H", 1.0}};
  browsers.activity_rate = 3.0;
  spec.groups = {browsers};

  SynthResult result = generate_log(spec);
  std::map<std::string, Resource> resources;
  for (const Resource& r : result.resources) resources[r.resource_id] = r;
  AgeingCurve curve = bin_usage_by_age(result.events, resources, 1.0,
                                       spec.window_start, spec.window_end);

  // Least-squares slope of log(rate) against age over the well-populated
  // middle of the archive.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const AgeBin& bin : curve.bins) {
    if (bin.age_midpoint < 5.0 || bin.age_midpoint > 50.0) continue;
    if (!(bin.rate > 0.0)) continue;
    double x = bin.age_midpoint;
    double y = std::log(bin.rate);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  REQUIRE(n >= 40);
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(std::abs(slope) < 0.005);
}

TEST_CASE("mode_weights_from_model shares mass like the rate model") {
  std::map<std::string, double> weights =
      mode_weights_from_model(default_model(), 50.0);
  // Masses: H 1.5*50, I 45/0.065, C 110/0.4, N 1600/16.
  double h = 75.0, i = 45.0 / 0.065, c = 275.0, n = 100.0;
  double total = h + i + c + n;
  CHECK(weights.at("H") == doctest::Approx(h / total).epsilon(1e-12));
  CHECK(weights.at("I") == doctest::Approx(i / total).epsilon(1e-12));
  CHECK(weights.at("C") == doctest::Approx(c / total).epsilon(1e-12));
  CHECK(weights.at("N") == doctest::Approx(n / total).epsilon(1e-12));
  double sum = 0.0;
  for (const auto& [mode, w] : weights) sum += w;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(code_of([] { mode_weights_from_model(default_model(), 0.0); }) ==
        ErrorCode::InvalidSpec);
  ObsolescenceModel hollow;
  hollow.components = {{'H', 0.0, 0.0}};
  CHECK(code_of([&] { mode_weights_from_model(hollow, 10.0); }) ==
        ErrorCode::InvalidSpec);
}

TEST_CASE("the ground-truth sidecar round-trips") {
  PopulationSpec spec = small_spec();
  SynthResult result = generate_log(spec);
  std::string csv = ground_truth_csv(result, spec.seed);

  GroundTruth truth = parse_ground_truth(csv);
  CHECK(truth.metadata.at("seed") == "777");
  CHECK_FALSE(truth.metadata.at("true_model").empty());
  REQUIRE(truth.rows.size() == result.truth.size());
  for (std::size_t i = 0; i < truth.rows.size(); ++i) {
    CHECK(truth.rows[i].event_id == result.truth[i].event_id);
    CHECK(truth.rows[i].true_session_id == result.truth[i].true_session_id);
    CHECK(truth.rows[i].user_id == result.truth[i].user_id);
    CHECK(truth.rows[i].mode == result.truth[i].mode);
  }

  SUBCASE("damaged sidecars are refused") {
    CHECK(code_of([] { parse_ground_truth(""); }) == ErrorCode::ColumnMismatch);
    CHECK(code_of([] { parse_ground_truth("a,b\n1,2\n"); }) ==
          ErrorCode::ColumnMismatch);
    CHECK(code_of([] {
            parse_ground_truth(
                "event_id,true_session_id,user_id,mode\ne1,s1\n");
          }) == ErrorCode::ColumnMismatch);
  }
}

TEST_CASE("a deep archive log refits its own obsolescence model") {
  // End to end: the generator's mixture, binned by age, hands the decay
  // rates back to the fitter.
  PopulationSpec spec;
  spec.window_start = parse_iso_date("2005-01-01");
  spec.window_end = parse_iso_date("2006-01-01");
  spec.seed = 20260817;
  for (int j = 0; j < 4; ++j)
    spec.journals.push_back({"jd" + std::to_string(j), 500,
                             parse_iso_date("1905-01-01") + j * kSecondsPerDay,
                             parse_iso_date("2004-12-01") + j * kSecondsPerDay});
  UserGroup pop;
  pop.label = "all";
  pop.count = 350;
  pop.mode_weights = mode_weights_from_model(default_model(), 100.0);
  pop.activity_rate = 8.0;
  spec.groups = {pop};

  SynthResult result = generate_log(spec);
  CHECK(result.events.size() > 1000000);

  std::map<std::string, Resource> resources;
  for (const Resource& r : result.resources) resources[r.resource_id] = r;
  AgeingCurve curve = bin_usage_by_age(result.events, resources, 1.0,
                                       spec.window_start, spec.window_end);

  auto [fit, diag] = fit_obsolescence(curve, 3, true);
  CHECK(diag.converged);
  double k_i = 0.0, k_c = 0.0;
  for (const ModelComponent& c : fit.components) {
    if (c.label == 'I') k_i = c.decay;
    if (c.label == 'C') k_c = c.decay;
  }
  CHECK(k_i == doctest::Approx(0.065).epsilon(0.20));
  CHECK(k_c == doctest::Approx(0.4).epsilon(0.20));
}
