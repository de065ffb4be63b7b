#pragma once
// Small fixtures and assertion helpers shared by the unit suites.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usemetrics/core.hpp"
#include "usemetrics/errors.hpp"

namespace testutil {

// Runs fn and returns the ErrorCode it threw, or nullopt if it returned.
template <typename Fn>
std::optional<usemetrics::ErrorCode> code_of(Fn&& fn) {
  try {
    std::forward<Fn>(fn)();
  } catch (const usemetrics::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline usemetrics::UsageEvent event(
    std::string id, std::string session, std::string user,
    std::string resource, std::int64_t ts,
    usemetrics::RequestType type =
        usemetrics::RequestType::fulltext_download()) {
  usemetrics::UsageEvent e;
  e.event_id = std::move(id);
  e.session_id = std::move(session);
  e.user_id = std::move(user);
  e.request_type = type;
  e.resource_id = std::move(resource);
  e.timestamp = ts;
  return e;
}

inline usemetrics::Resource resource(std::string id, std::string journal,
                                     std::int64_t published,
                                     int author_count = 1,
                                     std::string country = "") {
  usemetrics::Resource r;
  r.resource_id = std::move(id);
  r.journal_id = std::move(journal);
  r.publication_date = published;
  r.author_count = author_count;
  r.country = std::move(country);
  return r;
}

}  // namespace testutil
