#pragma once

#include "mcpshield/gateway/config.hpp"
#include "mcpshield/judge/judge.hpp"
#include "mcpshield/periodic/history.hpp"
#include "mcpshield/periodic/payload.hpp"

namespace mcpshield::periodic {

// True exactly when a whole new window of k unassessed calls sits on top of
// a `baseline`-call prefix: len >= baseline+k, (len-baseline) % k == 0, and
// the watermark has not already covered this length. With baseline=5, k=3
// that fires at 8, 11, 14, ... each at most once.
bool should_trigger(const History& history, int baseline, int k);

// Summarizes the first post_baseline records against the last post_k and
// precomputes the deltas. Throws std::invalid_argument when the history is
// shorter than baseline+k (no complete window to compare).
DriftPayload build_drift_payload(const History& history,
                                 const gateway::ShieldConfig& config);

struct Stage3Decision {
  enum class Outcome { no_drift, drift_logged, rejected_for_drift };

  Outcome outcome = Outcome::no_drift;
  judge::DriftVerdict verdict;

  json to_json() const;
};

const char* stage3_outcome_name(Stage3Decision::Outcome outcome);

// One drift assessment over the current windows. Advances the history's
// assessed watermark so the same window is never judged twice. Scores at or
// above post_threshold reject; 2..threshold-1 are logged; 1 is silent.
Stage3Decision run_stage3(judge::Judge& judge, History& history,
                          const gateway::ShieldConfig& config);

}  // namespace mcpshield::periodic
