#pragma once

#include "mcpshield/periodic/drift.hpp"
#include "mcpshield/probing/probing.hpp"
#include "mcpshield/projection/guard.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace mcpshield::gateway {

struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lifecycle of one server within a gateway session. Rejected is absorbing:
// once a server is out, nothing short of a new session lets it back in.
enum class TrustPhase { Unknown, Probing, Admitted, Rejected };

enum class RejectionStage { pre, exec, post };

const char* trust_phase_name(TrustPhase phase);
const char* rejection_stage_name(RejectionStage stage);
std::optional<RejectionStage> rejection_stage_from_name(const std::string& name);

struct TrustState {
  std::string server_id;
  TrustPhase phase = TrustPhase::Unknown;

  // Fingerprint of the most recently fetched manifest; set before any
  // stage-1 decision so even denylist hits know what they matched.
  std::string manifest_fingerprint;
  std::optional<std::string> admitted_manifest_fingerprint;

  std::optional<probing::Stage1Decision> stage1;
  std::optional<projection::Stage2Decision> last_stage2;
  std::optional<periodic::Stage3Decision> last_stage3;
  std::optional<RejectionStage> rejected_stage;
  std::string rejection_reason;

  // Legal edges: Unknown->Probing, Probing->Admitted, Probing->Rejected,
  // Admitted->Probing (manifest changed, re-admission), Admitted->Rejected.
  // Anything else throws StateError.
  void transition(TrustPhase next);

  json to_json() const;
};

}  // namespace mcpshield::gateway
