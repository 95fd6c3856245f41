#pragma once

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mcpshield::periodic {

using json = nlohmann::json;

// Aggregate view of one window of invocation records (baseline or recent).
struct WindowSummary {
  std::map<std::string, int> tool_histogram;
  std::set<std::string> manifest_fingerprints;
  std::set<std::string> domains;
  std::map<std::string, int> event_kind_histogram;
  double error_rate = 0.0;
  std::vector<std::size_t> output_lengths;
  std::vector<std::string> output_digests;
  std::vector<std::string> sample_outputs;  // bounded, may be empty

  json to_json() const;
};

// Baseline-to-recent deltas precomputed so the judge reasons over the
// comparison rather than raw records.
struct DriftDeltas {
  bool manifest_changed = false;
  int tool_count_delta = 0;
  std::set<std::string> new_domains;
  std::set<std::string> new_event_kinds;
  double error_rate_delta = 0.0;
  double output_length_shift = 0.0;  // relative mean-length change

  json to_json() const;
};

struct DriftPayload {
  std::string server_id;
  WindowSummary baseline_summary;
  WindowSummary recent_summary;
  DriftDeltas deltas;

  json to_json() const;
};

}  // namespace mcpshield::periodic
