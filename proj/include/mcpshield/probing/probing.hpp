#pragma once

#include "mcpshield/gateway/config.hpp"
#include "mcpshield/judge/judge.hpp"
#include "mcpshield/probing/artifact.hpp"
#include "mcpshield/protocol/connection.hpp"

#include <chrono>
#include <cstdint>
#include <utility>
#include <vector>

namespace mcpshield::probing {

// Deny share kept as an integer ratio; the threshold comparison happens on
// the exact counts, never on an accumulated float.
struct DenyScore {
  std::uint64_t denied = 0;
  std::uint64_t total = 0;

  double value() const {
    return total == 0 ? 0.0 : static_cast<double>(denied) / static_cast<double>(total);
  }
  // denied/total >= ratio, with the >= landing on the boundary inclusively.
  bool rejects(double ratio) const {
    return total != 0 &&
           static_cast<long double>(denied) >=
               static_cast<long double>(ratio) * static_cast<long double>(total);
  }
};

// Throws std::invalid_argument when no verdicts exist; a score over nothing
// is a caller bug, not a trust statement.
DenyScore compute_deny_score(const std::vector<judge::PerMockVerdict>& verdicts);

struct Stage1Decision {
  enum class Outcome { rejected_by_score, rejected_by_manifest, trusted };

  Outcome outcome = Outcome::trusted;
  DenyScore deny_score;
  // Absent when the score gate already rejected (the manifest judgment is
  // never bought for a server that failed the cheap gate) and for the
  // vacuous zero-tool case.
  std::optional<judge::ManifestVerdict> manifest_verdict;
  std::vector<std::pair<ProbeArtifact, judge::PerMockVerdict>> probes;

  bool trusted() const { return outcome == Outcome::trusted; }
  json to_json() const;
};

const char* stage1_outcome_name(Stage1Decision::Outcome outcome);

// One mock invocation under an isolated capture guard: the mock flag is set,
// every attempted effect is recorded against an empty scope, and nothing is
// authorized or realized. Results longer than result_max_chars are truncated
// before judging (0 keeps them whole). Probe failures of any sort land in
// `error`; the probe never throws.
ProbeArtifact run_probe(protocol::Connection& conn,
                        const protocol::ToolMetadata& tool,
                        const json& mock_args, int result_max_chars,
                        std::chrono::milliseconds timeout);

// Full pre-invocation check of a manifest: mock batches per tool, per-mock
// verdicts, the deny-score gate, then the holistic manifest judgment. A
// manifest with no tools is trusted vacuously without judge traffic.
Stage1Decision run_stage1(protocol::Connection& conn,
                          const protocol::Manifest& manifest,
                          const gateway::ShieldConfig& config,
                          judge::Judge& judge);

}  // namespace mcpshield::probing
