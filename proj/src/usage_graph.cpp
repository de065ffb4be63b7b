#include "usemetrics/usage_graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "usemetrics/io_utils.hpp"

namespace usemetrics {

PairFrequencyTable extract_pairs(
    const std::vector<UsageEvent>& events, PairLevel level, bool directed,
    const std::map<std::string, std::string>& journal_of,
    const ExtractOptions& options) {
  // Group by session, ordered by (timestamp, event_id) within each.
  std::map<std::string, std::vector<const UsageEvent*>> sessions;
  for (const UsageEvent& e : events) {
    if (e.session_id.empty())
      throw Error(ErrorCode::MissingSession,
                  "event without session id: " + e.event_id);
    if (options.window.has_value() &&
        (e.timestamp < options.window->first ||
         e.timestamp >= options.window->second))
      continue;  // session truncated at the analysis window boundary
    sessions[e.session_id].push_back(&e);
  }

  PairFrequencyTable table;
  table.level = level;
  table.directed = directed;

  auto key_of = [&](const UsageEvent& e) -> std::string {
    if (level == PairLevel::Article) return e.resource_id;
    auto it = journal_of.find(e.resource_id);
    if (it == journal_of.end())
      throw Error(ErrorCode::MissingJournalMapping,
                  "no journal for resource " + e.resource_id);
    return it->second;
  };

  for (auto& [sid, ptrs] : sessions) {
    std::sort(ptrs.begin(), ptrs.end(),
              [](const UsageEvent* a, const UsageEvent* b) {
                return event_order_lt(*a, *b);
              });
    // Double-click collapse happens at the request (resource) level before
    // any journal mapping.
    std::vector<const UsageEvent*> deduped;
    deduped.reserve(ptrs.size());
    for (const UsageEvent* e : ptrs) {
      if (!deduped.empty() && deduped.back()->resource_id == e->resource_id &&
          e->timestamp - deduped.back()->timestamp <=
              options.dedup_window_seconds)
        continue;
      deduped.push_back(e);
    }

    if (directed) {
      for (std::size_t i = 0; i + 1 < deduped.size(); ++i) {
        std::string src = key_of(*deduped[i]);
        std::string dst = key_of(*deduped[i + 1]);
        if (src == dst && !options.allow_self_pairs) continue;
        table.counts[{src, dst}] += 1;
      }
    } else {
      // Unordered co-occurrence: each pair of distinct keys present in the
      // session counts once, stored canonically.
      std::set<std::string> present;
      std::map<std::string, int> occurrences;
      for (const UsageEvent* e : deduped) {
        std::string key = key_of(*e);
        present.insert(key);
        occurrences[key] += 1;
      }
      for (auto a = present.begin(); a != present.end(); ++a) {
        auto b = a;
        for (++b; b != present.end(); ++b) table.counts[{*a, *b}] += 1;
        if (options.allow_self_pairs && occurrences[*a] >= 2)
          table.counts[{*a, *a}] += 1;
      }
    }
  }

  for (const auto& [pair, count] : table.counts)
    table.out_totals[pair.first] += count;
  return table;
}

TransitionMatrix transition_matrix(const PairFrequencyTable& pairs) {
  if (pairs.counts.empty())
    throw Error(ErrorCode::EmptyTable, "no pairs to normalize");

  std::set<std::string> node_set;
  for (const auto& [pair, count] : pairs.counts) {
    node_set.insert(pair.first);
    node_set.insert(pair.second);
  }
  TransitionMatrix tm;
  tm.nodes.assign(node_set.begin(), node_set.end());
  std::map<std::string, Eigen::Index> index;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(tm.nodes.size()); ++i)
    index[tm.nodes[static_cast<std::size_t>(i)]] = i;

  Eigen::Index n = static_cast<Eigen::Index>(tm.nodes.size());
  tm.p = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [pair, count] : pairs.counts) {
    long total = pairs.out_totals.at(pair.first);
    tm.p(index[pair.first], index[pair.second]) =
        static_cast<double>(count) / static_cast<double>(total);
  }
  for (const std::string& node : tm.nodes)
    if (pairs.out_totals.count(node) == 0) tm.dangling.push_back(node);
  return tm;
}

std::string write_pair_table(const PairFrequencyTable& pairs) {
  std::ostringstream out;
  for (const auto& [pair, count] : pairs.counts)
    out << pair.first << '\t' << pair.second << '\t' << count << '\n';
  return out.str();
}

PairFrequencyTable parse_pair_table(const std::string& text, PairLevel level,
                                    bool directed) {
  PairFrequencyTable table;
  table.level = level;
  table.directed = directed;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string::npos
                           ? std::string::npos
                           : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos)
      throw Error(ErrorCode::MalformedLine,
                  "pair table line " + std::to_string(line_no) +
                      " needs source<TAB>target<TAB>count");
    std::string src = line.substr(0, tab1);
    std::string dst = line.substr(tab1 + 1, tab2 - tab1 - 1);
    long count = 0;
    try {
      count = std::stol(line.substr(tab2 + 1));
    } catch (...) {
      throw Error(ErrorCode::MalformedLine,
                  "non-numeric pair count on line " + std::to_string(line_no));
    }
    if (src.empty() || dst.empty() || count <= 0)
      throw Error(ErrorCode::MalformedLine,
                  "invalid pair entry on line " + std::to_string(line_no));
    table.counts[{src, dst}] += count;
  }
  for (const auto& [pair, count] : table.counts)
    table.out_totals[pair.first] += count;
  return table;
}

std::string write_transition_matrix(const TransitionMatrix& tm,
                                    std::size_t dense_threshold) {
  std::ostringstream out;
  out << "# nodes: ";
  for (std::size_t i = 0; i < tm.nodes.size(); ++i) {
    if (i > 0) out << ',';
    out << tm.nodes[i];
  }
  out << '\n';
  out << "# dangling: ";
  for (std::size_t i = 0; i < tm.dangling.size(); ++i) {
    if (i > 0) out << ',';
    out << tm.dangling[i];
  }
  out << '\n';
  Eigen::Index n = tm.p.rows();
  if (tm.nodes.size() <= dense_threshold) {
    out << "# layout: dense\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j > 0) out << ',';
        out << format_double(tm.p(i, j));
      }
      out << '\n';
    }
  } else {
    out << "# layout: sparse\n";
    out << "source,target,p\n";
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (tm.p(i, j) != 0.0)
          out << tm.nodes[static_cast<std::size_t>(i)] << ','
              << tm.nodes[static_cast<std::size_t>(j)] << ','
              << format_double(tm.p(i, j)) << '\n';
  }
  return out.str();
}

}  // namespace usemetrics
