#include <unordered_map>

#include "usemetrics/ingest.hpp"

namespace usemetrics {

std::vector<UsageEvent> filter_events(const std::vector<UsageEvent>& events,
                                      const UserFilter& spec) {
  // Per-actor monthly totals over the input set, keyed by user when known,
  // by session otherwise.
  std::unordered_map<std::string, int> monthly_counts;
  if (spec.min_monthly_requests.has_value()) {
    for (const UsageEvent& e : events) {
      const std::string& actor = e.user_id.empty() ? e.session_id : e.user_id;
      if (actor.empty()) continue;
      int year = 0, month = 0;
      year_month_of(e.timestamp, year, month);
      monthly_counts[actor + "\x1f" + std::to_string(year * 100 + month)]++;
    }
  }

  std::vector<UsageEvent> out;
  out.reserve(events.size());
  for (const UsageEvent& e : events) {
    if (spec.full_text_only &&
        e.request_type.kind != RequestKind::FullTextDownload)
      continue;
    if (spec.request_type_in.has_value()) {
      bool found = false;
      for (const RequestType& rt : *spec.request_type_in) {
        if (rt == e.request_type) {
          found = true;
          break;
        }
      }
      if (!found) continue;
    }
    if (spec.min_monthly_requests.has_value()) {
      const std::string& actor = e.user_id.empty() ? e.session_id : e.user_id;
      if (actor.empty()) continue;  // unattributable under an actor filter
      int year = 0, month = 0;
      year_month_of(e.timestamp, year, month);
      auto it =
          monthly_counts.find(actor + "\x1f" + std::to_string(year * 100 + month));
      if (it == monthly_counts.end() || it->second < *spec.min_monthly_requests)
        continue;
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace usemetrics
