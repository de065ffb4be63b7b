#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usemetrics/core.hpp"

namespace usemetrics {

enum class PairLevel { Article, Journal };

struct PairFrequencyTable {
  PairLevel level = PairLevel::Article;
  bool directed = true;
  std::map<std::pair<std::string, std::string>, long> counts;
  std::map<std::string, long> out_totals;
};

struct ExtractOptions {
  bool allow_self_pairs = false;
  // Repeated identical consecutive requests (same resource) within this many
  // seconds collapse to one event (double-click artifacts).
  std::int64_t dedup_window_seconds = 10;
  // When set, sessions are truncated at the window boundary: only events
  // inside [first, second) participate.
  std::optional<std::pair<std::int64_t, std::int64_t>> window;
};

// Consecutive-pair extraction within sessions ordered by (timestamp,
// event_id). Directed mode counts each consecutive ordered pair once;
// undirected mode counts each unordered pair of distinct keys co-occurring
// in a session once per session, stored under (min, max).
// Journal level maps resources through journal_of.
// Throws Error(MissingSession) on an event without a session id and
// Error(MissingJournalMapping) when a resource has no journal.
PairFrequencyTable extract_pairs(
    const std::vector<UsageEvent>& events, PairLevel level, bool directed,
    const std::map<std::string, std::string>& journal_of,
    const ExtractOptions& options = {});

struct TransitionMatrix {
  std::vector<std::string> nodes;  // sorted ascending
  Eigen::MatrixXd p;               // row-stochastic except dangling rows
  std::vector<std::string> dangling;
};

// p[i][j] = counts[(i,j)] / out_totals[i]; rows without outgoing pairs are
// all-zero and listed as dangling. Throws Error(EmptyTable).
TransitionMatrix transition_matrix(const PairFrequencyTable& pairs);

// "source<TAB>target<TAB>count" lines, sources then targets ascending.
std::string write_pair_table(const PairFrequencyTable& pairs);
PairFrequencyTable parse_pair_table(const std::string& text, PairLevel level,
                                    bool directed);

// Node list header comment, then either a dense CSV (n <= dense_threshold)
// or sparse "source,target,p" triplets.
std::string write_transition_matrix(const TransitionMatrix& tm,
                                    std::size_t dense_threshold = 64);

}  // namespace usemetrics
