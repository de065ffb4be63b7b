#include <doctest.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "support/helpers.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/usage_graph.hpp"

using namespace usemetrics;
using testutil::code_of;

namespace {

// One session visiting d1, d2, d1, d3 a minute apart.
std::vector<UsageEvent> walk_fixture() {
  return {
      testutil::event("e1", "s1", "u1", "d1", 1000),
      testutil::event("e2", "s1", "u1", "d2", 1060),
      testutil::event("e3", "s1", "u1", "d1", 1120),
      testutil::event("e4", "s1", "u1", "d3", 1180),
  };
}

}  // namespace

TEST_CASE("directed pairs follow the within-session click order") {
  PairFrequencyTable pairs =
      extract_pairs(walk_fixture(), PairLevel::Article, true, {});
  CHECK(pairs.counts.size() == 3);
  CHECK(pairs.counts.at({"d1", "d2"}) == 1);
  CHECK(pairs.counts.at({"d2", "d1"}) == 1);
  CHECK(pairs.counts.at({"d1", "d3"}) == 1);
  CHECK(pairs.out_totals.at("d1") == 2);
  CHECK(pairs.out_totals.at("d2") == 1);
  CHECK(pairs.out_totals.count("d3") == 0);

  TransitionMatrix tm = transition_matrix(pairs);
  REQUIRE(tm.nodes == std::vector<std::string>{"d1", "d2", "d3"});
  CHECK(tm.p(0, 1) == 0.5);
  CHECK(tm.p(0, 2) == 0.5);
  CHECK(tm.p(1, 0) == 1.0);
  CHECK(tm.p(2, 0) == 0.0);
  CHECK(tm.p(2, 1) == 0.0);
  CHECK(tm.p(2, 2) == 0.0);
  CHECK(tm.dangling == std::vector<std::string>{"d3"});
}

TEST_CASE("equal timestamps break ties by event id") {
  std::vector<UsageEvent> events = {
      testutil::event("b", "s1", "u1", "r2", 500),
      testutil::event("a", "s1", "u1", "r1", 500),
  };
  PairFrequencyTable pairs =
      extract_pairs(events, PairLevel::Article, true, {});
  CHECK(pairs.counts.at({"r1", "r2"}) == 1);
  CHECK(pairs.counts.count({"r2", "r1"}) == 0);
}

TEST_CASE("journal level maps resources before pairing") {
  std::map<std::string, std::string> journal_of = {
      {"d1", "jA"}, {"d2", "jB"}, {"d3", "jA"}};
  PairFrequencyTable pairs =
      extract_pairs(walk_fixture(), PairLevel::Journal, true, journal_of);
  // d1->d2 = jA->jB, d2->d1 = jB->jA, d1->d3 = jA->jA dropped (self pair).
  CHECK(pairs.counts.size() == 2);
  CHECK(pairs.counts.at({"jA", "jB"}) == 1);
  CHECK(pairs.counts.at({"jB", "jA"}) == 1);

  SUBCASE("self pairs survive when allowed") {
    ExtractOptions options;
    options.allow_self_pairs = true;
    PairFrequencyTable loops = extract_pairs(
        walk_fixture(), PairLevel::Journal, true, journal_of, options);
    CHECK(loops.counts.at({"jA", "jA"}) == 1);
  }

  SUBCASE("an unmapped resource fails") {
    journal_of.erase("d3");
    CHECK(code_of([&] {
            extract_pairs(walk_fixture(), PairLevel::Journal, true,
                          journal_of);
          }) == ErrorCode::MissingJournalMapping);
  }
}

TEST_CASE("events without a session id are rejected") {
  std::vector<UsageEvent> events = {
      testutil::event("e1", "", "u1", "d1", 1000)};
  CHECK(code_of([&] {
          extract_pairs(events, PairLevel::Article, true, {});
        }) == ErrorCode::MissingSession);
}

TEST_CASE("undirected pairs count co-occurrence once per session") {
  std::vector<UsageEvent> events = walk_fixture();
  // A second session revisits d2 and d1; co-occurrence counts once more.
  events.push_back(testutil::event("f1", "s2", "u2", "d2", 9000));
  events.push_back(testutil::event("f2", "s2", "u2", "d1", 9100));
  events.push_back(testutil::event("f3", "s2", "u2", "d2", 9200));

  PairFrequencyTable pairs =
      extract_pairs(events, PairLevel::Article, false, {});
  CHECK_FALSE(pairs.directed);
  // Keys are stored canonically (min, max) regardless of click order.
  CHECK(pairs.counts.at({"d1", "d2"}) == 2);
  CHECK(pairs.counts.at({"d1", "d3"}) == 1);
  CHECK(pairs.counts.at({"d2", "d3"}) == 1);
  CHECK(pairs.counts.count({"d2", "d1"}) == 0);

  SUBCASE("a repeated key becomes a self pair only when allowed") {
    ExtractOptions options;
    options.allow_self_pairs = true;
    PairFrequencyTable loops =
        extract_pairs(events, PairLevel::Article, false, {}, options);
    CHECK(loops.counts.at({"d1", "d1"}) == 1);  // s1 visits d1 twice
    CHECK(loops.counts.at({"d2", "d2"}) == 1);  // s2 visits d2 twice
    CHECK(loops.counts.count({"d3", "d3"}) == 0);
  }
}

TEST_CASE("double clicks collapse inside the dedup window") {
  std::vector<UsageEvent> events = {
      testutil::event("e1", "s1", "u1", "d1", 1000),
      testutil::event("e2", "s1", "u1", "d1", 1004),  // double click
      testutil::event("e3", "s1", "u1", "d2", 1100),
      testutil::event("e4", "s1", "u1", "d2", 1200),  // deliberate revisit
  };
  ExtractOptions options;
  options.allow_self_pairs = true;

  PairFrequencyTable pairs =
      extract_pairs(events, PairLevel::Article, true, {}, options);
  // e2 collapses into e1; e4 is 100s after e3 and survives as a self pair.
  CHECK(pairs.counts.size() == 2);
  CHECK(pairs.counts.at({"d1", "d2"}) == 1);
  CHECK(pairs.counts.at({"d2", "d2"}) == 1);

  SUBCASE("a wider window collapses the revisit too") {
    options.dedup_window_seconds = 120;
    PairFrequencyTable wide =
        extract_pairs(events, PairLevel::Article, true, {}, options);
    CHECK(wide.counts.size() == 1);
    CHECK(wide.counts.at({"d1", "d2"}) == 1);
  }
}

TEST_CASE("the analysis window truncates sessions at its edges") {
  ExtractOptions options;
  options.window = {{1060, 1180}};  // keeps e2 and e3 only
  PairFrequencyTable pairs =
      extract_pairs(walk_fixture(), PairLevel::Article, true, {}, options);
  CHECK(pairs.counts.size() == 1);
  CHECK(pairs.counts.at({"d2", "d1"}) == 1);
}

TEST_CASE("directed counts conserve clicks on dup-free sessions") {
  std::mt19937_64 rng(4242);
  std::vector<UsageEvent> events;
  long expected = 0;
  for (int s = 0; s < 40; ++s) {
    int len = 2 + static_cast<int>(rng() % 9);
    expected += len - 1;
    std::string sid = "s" + std::to_string(s);
    std::string prev;
    for (int i = 0; i < len; ++i) {
      // Distinct consecutive resources, spaced past the dedup window.
      std::string res;
      do {
        res = "r" + std::to_string(rng() % 12);
      } while (res == prev);
      prev = res;
      events.push_back(testutil::event(
          sid + "-" + std::to_string(i), sid, "u", res, 10000 + s * 100000 + i * 60));
    }
  }
  PairFrequencyTable pairs =
      extract_pairs(events, PairLevel::Article, true, {});
  long total = 0;
  for (const auto& [pair, count] : pairs.counts) total += count;
  CHECK(total == expected);

  long out_sum = 0;
  for (const auto& [node, count] : pairs.out_totals) out_sum += count;
  CHECK(out_sum == total);

  SUBCASE("non-dangling rows of the transition matrix sum to one") {
    TransitionMatrix tm = transition_matrix(pairs);
    for (Eigen::Index i = 0; i < tm.p.rows(); ++i) {
      double row = tm.p.row(i).sum();
      bool dangling = false;
      for (const std::string& d : tm.dangling)
        if (d == tm.nodes[static_cast<std::size_t>(i)]) dangling = true;
      if (dangling)
        CHECK(row == 0.0);
      else
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("pair tables round-trip through their text form") {
  PairFrequencyTable pairs =
      extract_pairs(walk_fixture(), PairLevel::Article, true, {});
  std::string text = write_pair_table(pairs);
  CHECK(text == "d1\td2\t1\nd1\td3\t1\nd2\td1\t1\n");

  PairFrequencyTable back = parse_pair_table(text, PairLevel::Article, true);
  CHECK(back.counts == pairs.counts);
  CHECK(back.out_totals == pairs.out_totals);
  CHECK(write_pair_table(back) == text);

  SUBCASE("malformed lines name their position") {
    CHECK(code_of([] { parse_pair_table("a\tb\n", PairLevel::Article, true); }) ==
          ErrorCode::MalformedLine);
    CHECK(code_of([] {
            parse_pair_table("a\tb\tmany\n", PairLevel::Article, true);
          }) == ErrorCode::MalformedLine);
    CHECK(code_of([] {
            parse_pair_table("a\tb\t0\n", PairLevel::Article, true);
          }) == ErrorCode::MalformedLine);
    CHECK(code_of([] {
            parse_pair_table("\tb\t3\n", PairLevel::Article, true);
          }) == ErrorCode::MalformedLine);
  }
}

TEST_CASE("an empty pair table cannot be normalized") {
  CHECK(code_of([] { transition_matrix(PairFrequencyTable{}); }) ==
        ErrorCode::EmptyTable);
}

TEST_CASE("transition matrices write dense or sparse by size") {
  TransitionMatrix tm =
      transition_matrix(extract_pairs(walk_fixture(), PairLevel::Article,
                                      true, {}));
  std::string dense = write_transition_matrix(tm);
  CHECK(dense.find("# nodes: d1,d2,d3\n") != std::string::npos);
  CHECK(dense.find("# dangling: d3\n") != std::string::npos);
  CHECK(dense.find("# layout: dense\n") != std::string::npos);
  CHECK(dense.find("0,0.5,0.5\n") != std::string::npos);
  CHECK(dense.find("1,0,0\n") != std::string::npos);
  CHECK(dense.find("0,0,0\n") != std::string::npos);

  std::string sparse = write_transition_matrix(tm, 2);
  CHECK(sparse.find("# layout: sparse\n") != std::string::npos);
  CHECK(sparse.find("source,target,p\n") != std::string::npos);
  CHECK(sparse.find("d1,d2,0.5\n") != std::string::npos);
  CHECK(sparse.find("d1,d3,0.5\n") != std::string::npos);
  CHECK(sparse.find("d2,d1,1\n") != std::string::npos);
  // Zero rows contribute nothing in sparse form.
  CHECK(sparse.find("\nd3,") == std::string::npos);
}
