#include "mcpshield/periodic/drift.hpp"

#include "mcpshield/protocol/canonical.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mcpshield::periodic {

json WindowSummary::to_json() const {
  return json{
      {"tool_histogram", tool_histogram},
      {"manifest_fingerprints", manifest_fingerprints},
      {"domains", domains},
      {"event_kind_histogram", event_kind_histogram},
      {"error_rate", error_rate},
      {"output_lengths", output_lengths},
      {"output_digests", output_digests},
      {"sample_outputs", sample_outputs},
  };
}

json DriftDeltas::to_json() const {
  return json{
      {"manifest_changed", manifest_changed},
      {"tool_count_delta", tool_count_delta},
      {"new_domains", new_domains},
      {"new_event_kinds", new_event_kinds},
      {"error_rate_delta", error_rate_delta},
      {"output_length_shift", output_length_shift},
  };
}

json DriftPayload::to_json() const {
  return json{
      {"server_id", server_id},
      {"baseline_summary", baseline_summary.to_json()},
      {"recent_summary", recent_summary.to_json()},
      {"deltas", deltas.to_json()},
  };
}

bool should_trigger(const History& history, int baseline, int k) {
  if (baseline < 1 || k < 1) return false;
  auto len = history.records.size();
  auto b = static_cast<std::size_t>(baseline);
  auto window = static_cast<std::size_t>(k);
  if (len < b + window) return false;
  if ((len - b) % window != 0) return false;
  return history.last_assessed_seq < len;
}

namespace {

constexpr std::size_t kMaxSamples = 3;

WindowSummary summarize(const std::vector<InvocationRecord>& records,
                        std::size_t begin, std::size_t end,
                        bool include_output) {
  WindowSummary s;
  std::size_t errors = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const InvocationRecord& r = records[i];
    ++s.tool_histogram[r.tool_name];
    s.manifest_fingerprints.insert(r.manifest_fingerprint);
    s.domains.insert(r.domains_contacted.begin(), r.domains_contacted.end());
    for (const auto& [kind, count] : r.event_kinds) {
      s.event_kind_histogram[kind] += count;
    }
    if (r.output_error) ++errors;
    s.output_lengths.push_back(r.output_summary.size());
    s.output_digests.push_back(protocol::sha256_hex(r.output_summary));
  }
  std::size_t n = end - begin;
  s.error_rate = n == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(n);
  if (include_output) {
    // Most recent outputs of the window, capped.
    std::size_t take = std::min(kMaxSamples, n);
    for (std::size_t i = end - take; i < end; ++i) {
      s.sample_outputs.push_back(records[i].output_summary);
    }
  }
  return s;
}

double mean_of(const std::vector<std::size_t>& xs) {
  if (xs.empty()) return 0.0;
  double total = std::accumulate(xs.begin(), xs.end(), 0.0);
  return total / static_cast<double>(xs.size());
}

}  // namespace

DriftPayload build_drift_payload(const History& history,
                                 const gateway::ShieldConfig& config) {
  auto b = static_cast<std::size_t>(config.post_baseline);
  auto k = static_cast<std::size_t>(config.post_k);
  auto len = history.records.size();
  if (len < b + k) {
    throw std::invalid_argument(
        "drift payload needs at least baseline+k records");
  }

  DriftPayload payload;
  payload.server_id = history.server_id;
  payload.baseline_summary =
      summarize(history.records, 0, b, config.post_include_output);
  payload.recent_summary =
      summarize(history.records, len - k, len, config.post_include_output);

  const WindowSummary& base = payload.baseline_summary;
  const WindowSummary& recent = payload.recent_summary;
  DriftDeltas& d = payload.deltas;

  std::set<std::string> all_fingerprints = base.manifest_fingerprints;
  all_fingerprints.insert(recent.manifest_fingerprints.begin(),
                          recent.manifest_fingerprints.end());
  d.manifest_changed = all_fingerprints.size() > 1;

  d.tool_count_delta = static_cast<int>(recent.tool_histogram.size()) -
                       static_cast<int>(base.tool_histogram.size());

  for (const auto& domain : recent.domains) {
    if (!base.domains.count(domain)) d.new_domains.insert(domain);
  }
  for (const auto& [kind, count] : recent.event_kind_histogram) {
    if (!base.event_kind_histogram.count(kind)) d.new_event_kinds.insert(kind);
  }

  d.error_rate_delta = recent.error_rate - base.error_rate;

  double base_mean = mean_of(base.output_lengths);
  double recent_mean = mean_of(recent.output_lengths);
  d.output_length_shift = (recent_mean - base_mean) / std::max(1.0, base_mean);

  return payload;
}

const char* stage3_outcome_name(Stage3Decision::Outcome outcome) {
  switch (outcome) {
    case Stage3Decision::Outcome::no_drift: return "no_drift";
    case Stage3Decision::Outcome::drift_logged: return "drift_logged";
    case Stage3Decision::Outcome::rejected_for_drift:
      return "rejected_for_drift";
  }
  return "unknown";
}

json Stage3Decision::to_json() const {
  return json{{"outcome", stage3_outcome_name(outcome)},
              {"verdict", verdict.to_json()}};
}

Stage3Decision run_stage3(judge::Judge& judge, History& history,
                          const gateway::ShieldConfig& config) {
  DriftPayload payload = build_drift_payload(history, config);
  Stage3Decision decision;
  decision.verdict = judge.judge_drift(payload);

  if (decision.verdict.drift_score >= config.post_threshold) {
    decision.outcome = Stage3Decision::Outcome::rejected_for_drift;
  } else if (decision.verdict.drift_score >= 2) {
    decision.outcome = Stage3Decision::Outcome::drift_logged;
  } else {
    decision.outcome = Stage3Decision::Outcome::no_drift;
  }

  // Watermark advances whatever the outcome; this window is spent.
  history.last_assessed_seq = history.records.size();
  return decision;
}

}  // namespace mcpshield::periodic
