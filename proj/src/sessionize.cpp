#include <unordered_map>

#include "usemetrics/ingest.hpp"
#include "usemetrics/rng.hpp"

namespace usemetrics {

std::vector<std::string> make_session_keys(
    const std::vector<KeySource>& sources,
    const std::vector<std::string>& key_fields) {
  std::vector<std::string> keys;
  keys.reserve(sources.size());
  for (const KeySource& src : sources) {
    std::string key;
    for (const std::string& field : key_fields) {
      if (!key.empty()) key += '\x1f';  // unit separator avoids concatenation
      if (field == "client_ip") {
        key += src.client_ip;
      } else if (field == "user_agent") {
        key += src.user_agent;
      } else if (field == "auth_user") {
        key += src.auth_user;
      } else {
        throw Error(ErrorCode::InvalidConfig,
                    "unknown sessionization key field: " + field);
      }
    }
    keys.push_back(std::move(key));
  }
  return keys;
}

std::vector<UsageEvent> sessionize(const std::vector<UsageEvent>& events,
                                   const std::vector<std::string>& keys,
                                   const SessionizationPolicy& policy,
                                   std::uint64_t seed) {
  if (events.size() != keys.size())
    throw Error(ErrorCode::LengthMismatch,
                "events and keys differ in length");
  if (!policy.valid())
    throw Error(ErrorCode::InvalidConfig, "invalid sessionization policy");

  struct KeyState {
    std::int64_t last_ts = 0;
    std::int64_t session_start = 0;
    std::string session_id;
    std::uint64_t ordinal = 0;  // sessions opened under this key
  };
  std::unordered_map<std::string, KeyState> states;
  states.reserve(events.size() / 4 + 8);

  std::vector<UsageEvent> out = events;
  std::uint64_t global_index = 0;  // suffix guarantees cross-key uniqueness
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string& key = keys[i];
    KeyState& st = states[key];
    std::int64_t ts = out[i].timestamp;
    bool fresh = st.session_id.empty();
    if (!fresh && ts < st.last_ts)
      throw Error(ErrorCode::UnsortedInput,
                  "timestamps regress within key '" + key + "' at event " +
                      out[i].event_id);
    bool gap_expired = !fresh && (ts - st.last_ts) > policy.inactivity_timeout;
    bool span_expired =
        !fresh && (ts - st.session_start) > policy.max_session_length;
    if (fresh || gap_expired || span_expired) {
      std::uint64_t state = seed ^ fnv1a64(key);
      state = splitmix64(state) + st.ordinal;
      std::uint64_t token = splitmix64(state);
      st.session_id =
          "s" + hex64(token) + "-" + std::to_string(global_index);
      ++st.ordinal;
      ++global_index;
      st.session_start = ts;
    }
    st.last_ts = ts;
    out[i].session_id = st.session_id;
  }
  return out;
}

}  // namespace usemetrics
