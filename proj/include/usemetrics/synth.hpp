#pragma once
// synth.hpp
// Seeded synthetic usage-log generator. Users act in behavioral modes
// (N: new releases, C: current literature, I: specific lookups, H: archive
// browsing, S: citation-driven study); the generator emits a sessionless
// canonical event stream plus a ground-truth sidecar that records the true
// sessions, the mode behind each event, and the model parameters used, so
// fitting and graph extraction can be verified against known answers.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "usemetrics/core.hpp"
#include "usemetrics/errors.hpp"
#include "usemetrics/obsolescence.hpp"

namespace usemetrics {

struct UserGroup {
  std::string label;
  int count = 0;
  // Keys from {"N","C","I","H","S"}; non-negative, summing to 1.
  std::map<std::string, double> mode_weights;
  // Request-type token -> weight; empty means all fulltext_download.
  std::map<std::string, double> request_type_mix;
  double activity_rate = 0.0;  // expected events per user per day
};

struct SynthJournal {
  std::string journal_id;
  int article_count = 0;
  std::int64_t pub_start = 0;  // publication dates spread evenly over
  std::int64_t pub_end = 0;    // [pub_start, pub_end]
};

struct PopulationSpec {
  std::vector<UserGroup> groups;
  std::vector<SynthJournal> journals;
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::uint64_t seed = 1;
  // Decay rates for C/I modes come from here; also echoed into the sidecar
  // as the true parameter set.
  ObsolescenceModel model = default_model();
};

// Throws Error(InvalidSpec) describing the first violated invariant.
void check_spec(const PopulationSpec& spec);

struct GroundTruthRow {
  std::string event_id;
  std::string true_session_id;
  std::string user_id;
  std::string mode;  // one of N C I H S
};

struct SynthResult {
  std::vector<UsageEvent> events;  // session_id empty, merged by time
  std::vector<GroundTruthRow> truth;  // parallel to events
  std::vector<Resource> resources;
  ObsolescenceModel model;
};

// Deterministic in spec.seed: per-user streams from derived seeds, merged
// by (timestamp, event_id). One session per active user-day, at most 64
// events each, intra-session gaps 30..300 s, consecutive same-user sessions
// separated by well over any such gap.
SynthResult generate_log(const PopulationSpec& spec);

// Mode weights matching a model's per-component event totals: each decaying
// component contributes amplitude/decay, the constant component amplitude
// times the archive depth in years. Used to mirror a rate model's mixture.
std::map<std::string, double> mode_weights_from_model(
    const ObsolescenceModel& model, double archive_years);

// Sidecar CSV: '#' metadata lines (true model parameters, seed), then
// "event_id,true_session_id,user_id,mode" rows in event order.
std::string ground_truth_csv(const SynthResult& result,
                             std::uint64_t seed);

struct GroundTruth {
  std::vector<GroundTruthRow> rows;
  std::map<std::string, std::string> metadata;
};

GroundTruth parse_ground_truth(const std::string& csv);

}  // namespace usemetrics
