#include "mcpshield/gateway/trust_state.hpp"

namespace mcpshield::gateway {

const char* trust_phase_name(TrustPhase phase) {
  switch (phase) {
    case TrustPhase::Unknown: return "Unknown";
    case TrustPhase::Probing: return "Probing";
    case TrustPhase::Admitted: return "Admitted";
    case TrustPhase::Rejected: return "Rejected";
  }
  return "unknown";
}

const char* rejection_stage_name(RejectionStage stage) {
  switch (stage) {
    case RejectionStage::pre: return "pre";
    case RejectionStage::exec: return "exec";
    case RejectionStage::post: return "post";
  }
  return "unknown";
}

std::optional<RejectionStage> rejection_stage_from_name(
    const std::string& name) {
  if (name == "pre") return RejectionStage::pre;
  if (name == "exec") return RejectionStage::exec;
  if (name == "post") return RejectionStage::post;
  return std::nullopt;
}

void TrustState::transition(TrustPhase next) {
  bool legal = false;
  switch (phase) {
    case TrustPhase::Unknown:
      legal = next == TrustPhase::Probing;
      break;
    case TrustPhase::Probing:
      legal = next == TrustPhase::Admitted || next == TrustPhase::Rejected;
      break;
    case TrustPhase::Admitted:
      legal = next == TrustPhase::Probing || next == TrustPhase::Rejected;
      break;
    case TrustPhase::Rejected:
      legal = false;  // absorbing
      break;
  }
  if (!legal) {
    throw StateError(std::string("illegal trust transition for ") + server_id +
                     ": " + trust_phase_name(phase) + " -> " +
                     trust_phase_name(next));
  }
  phase = next;
}

json TrustState::to_json() const {
  json out{
      {"server_id", server_id},
      {"phase", trust_phase_name(phase)},
      {"manifest_fingerprint", manifest_fingerprint},
  };
  if (admitted_manifest_fingerprint) {
    out["admitted_manifest_fingerprint"] = *admitted_manifest_fingerprint;
  }
  if (stage1) out["stage1"] = stage1->to_json();
  if (last_stage2) out["last_stage2"] = last_stage2->to_json();
  if (last_stage3) out["last_stage3"] = last_stage3->to_json();
  if (rejected_stage) {
    out["rejected_stage"] = rejection_stage_name(*rejected_stage);
    out["rejection_reason"] = rejection_reason;
  }
  return out;
}

}  // namespace mcpshield::gateway
