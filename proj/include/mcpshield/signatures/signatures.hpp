#pragma once

#include "mcpshield/gateway/trust_state.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcpshield::signatures {

using json = nlohmann::json;

inline constexpr int kSignatureSchemaVersion = 1;

struct SignatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shareable denial record for one malicious manifest. Keyed by fingerprint,
// so a renamed server with identical tool metadata stays caught while any
// metadata edit (which changes the fingerprint) escapes the key on purpose:
// changed behavior deserves a fresh assessment, not a stale match.
struct ServerSignature {
  int schema_version = kSignatureSchemaVersion;
  std::string manifest_fingerprint;
  std::string display_name;  // local handle at rejection time, informational
  gateway::RejectionStage rejection_stage = gateway::RejectionStage::pre;
  std::vector<std::string> flags;
  std::vector<std::string> signals;   // whitelisted drift signals; post only
  std::optional<int> drift_score;     // post only
  std::string evidence_digest;        // sha256 hex of the evidence bundle
  std::uint64_t issued_at = 0;        // unix seconds

  json to_json() const;
  // Validating parse; throws SignatureError describing the first problem.
  static ServerSignature from_json(const json& j);
};

// Builds the signature for a server the gateway just rejected. Throws
// SignatureError if the state is not Rejected (there is nothing to attest).
// evidence is the audit bundle backing the decision; only its digest is
// embedded, so signatures stay small and carry no third-party data.
ServerSignature emit_signature(const gateway::TrustState& state,
                               const json& evidence, std::uint64_t issued_at);

enum class SignatureSource { local, imported };

struct ImportReport {
  int imported = 0;                                   // added or superseded
  std::vector<std::pair<int, std::string>> skipped;   // (index, reason)
};

// Fingerprint-keyed denylist. One entry per fingerprint; when the same
// fingerprint arrives twice the newer issued_at wins (ties keep what's
// already there).
class SignatureRegistry {
 public:
  bool add(ServerSignature signature, SignatureSource source);
  const ServerSignature* check_denylist(const std::string& fingerprint) const;
  std::vector<ServerSignature> all() const;  // ascending fingerprint order
  std::size_t size() const { return entries_.size(); }

  // Canonical container bytes: compact JSON with sorted keys, signatures in
  // fingerprint order, trailing newline. Export-import-export is
  // byte-identical.
  std::string export_text() const;
  void export_file(const std::filesystem::path& path) const;

  // Accepts the container format, validating each record independently:
  // corrupt records are reported and skipped, valid ones still land. An
  // unreadable container or unsupported top-level schema_version throws.
  ImportReport import_text(const std::string& text);
  ImportReport import_file(const std::filesystem::path& path);

 private:
  struct Entry {
    ServerSignature signature;
    SignatureSource source = SignatureSource::local;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace mcpshield::signatures
