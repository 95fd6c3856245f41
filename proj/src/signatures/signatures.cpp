#include "mcpshield/signatures/signatures.hpp"

#include "mcpshield/protocol/canonical.hpp"

#include <fstream>
#include <sstream>

namespace mcpshield::signatures {

json ServerSignature::to_json() const {
  // Fixed key set (absent drift_score serialized as null) keeps the
  // serialization canonical: same signature, same bytes.
  return json{
      {"schema_version", schema_version},
      {"manifest_fingerprint", manifest_fingerprint},
      {"display_name", display_name},
      {"rejection_stage", gateway::rejection_stage_name(rejection_stage)},
      {"flags", flags},
      {"signals", signals},
      {"drift_score", drift_score ? json(*drift_score) : json()},
      {"evidence_digest", evidence_digest},
      {"issued_at", issued_at},
  };
}

ServerSignature ServerSignature::from_json(const json& j) {
  if (!j.is_object()) throw SignatureError("signature is not an object");
  for (const char* key :
       {"schema_version", "manifest_fingerprint", "display_name",
        "rejection_stage", "flags", "signals", "drift_score",
        "evidence_digest", "issued_at"}) {
    if (!j.contains(key)) {
      throw SignatureError(std::string("missing key: ") + key);
    }
  }

  ServerSignature sig;
  if (!j["schema_version"].is_number_integer()) {
    throw SignatureError("schema_version must be an integer");
  }
  sig.schema_version = j["schema_version"].get<int>();
  if (sig.schema_version != kSignatureSchemaVersion) {
    throw SignatureError("unsupported signature schema_version: " +
                         std::to_string(sig.schema_version));
  }

  if (!j["manifest_fingerprint"].is_string() ||
      j["manifest_fingerprint"].get<std::string>().size() != 64) {
    throw SignatureError("manifest_fingerprint must be a sha256 hex string");
  }
  sig.manifest_fingerprint = j["manifest_fingerprint"].get<std::string>();
  for (char c : sig.manifest_fingerprint) {
    bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!hex) throw SignatureError("manifest_fingerprint must be lowercase hex");
  }

  if (!j["display_name"].is_string()) {
    throw SignatureError("display_name must be a string");
  }
  sig.display_name = j["display_name"].get<std::string>();

  if (!j["rejection_stage"].is_string()) {
    throw SignatureError("rejection_stage must be a string");
  }
  auto stage =
      gateway::rejection_stage_from_name(j["rejection_stage"].get<std::string>());
  if (!stage) {
    throw SignatureError("unknown rejection_stage: " +
                         j["rejection_stage"].get<std::string>());
  }
  sig.rejection_stage = *stage;

  if (!j["flags"].is_array()) throw SignatureError("flags must be an array");
  for (const auto& f : j["flags"]) {
    if (!f.is_string()) throw SignatureError("flags entries must be strings");
    sig.flags.push_back(f.get<std::string>());
  }

  if (!j["signals"].is_array()) throw SignatureError("signals must be an array");
  for (const auto& s : j["signals"]) {
    if (!s.is_string()) throw SignatureError("signals entries must be strings");
    std::string signal = s.get<std::string>();
    if (!judge::is_whitelisted_signal(signal)) {
      throw SignatureError("signal outside whitelist: " + signal);
    }
    sig.signals.push_back(signal);
  }
  if (!sig.signals.empty() &&
      sig.rejection_stage != gateway::RejectionStage::post) {
    throw SignatureError("signals are only valid for post-stage rejections");
  }

  if (!j["drift_score"].is_null()) {
    if (!j["drift_score"].is_number_integer()) {
      throw SignatureError("drift_score must be an integer or null");
    }
    int score = j["drift_score"].get<int>();
    if (score < 1 || score > 5) {
      throw SignatureError("drift_score out of range: " + std::to_string(score));
    }
    if (sig.rejection_stage != gateway::RejectionStage::post) {
      throw SignatureError("drift_score is only valid for post-stage rejections");
    }
    sig.drift_score = score;
  }

  if (!j["evidence_digest"].is_string()) {
    throw SignatureError("evidence_digest must be a string");
  }
  sig.evidence_digest = j["evidence_digest"].get<std::string>();

  if (!j["issued_at"].is_number_unsigned() &&
      !j["issued_at"].is_number_integer()) {
    throw SignatureError("issued_at must be an integer timestamp");
  }
  if (j["issued_at"].is_number_integer() && j["issued_at"].get<std::int64_t>() < 0) {
    throw SignatureError("issued_at must not be negative");
  }
  sig.issued_at = j["issued_at"].get<std::uint64_t>();
  return sig;
}

ServerSignature emit_signature(const gateway::TrustState& state,
                               const json& evidence,
                               std::uint64_t issued_at) {
  if (state.phase != gateway::TrustPhase::Rejected || !state.rejected_stage) {
    throw SignatureError("cannot emit a signature for server '" +
                         state.server_id + "': not rejected");
  }

  ServerSignature sig;
  sig.manifest_fingerprint = state.manifest_fingerprint;
  sig.display_name = state.server_id;
  sig.rejection_stage = *state.rejected_stage;
  sig.evidence_digest = protocol::sha256_hex(evidence.dump());
  sig.issued_at = issued_at;

  switch (sig.rejection_stage) {
    case gateway::RejectionStage::pre:
      if (state.stage1 && state.stage1->manifest_verdict) {
        sig.flags = state.stage1->manifest_verdict->flags;
      } else {
        sig.flags = {"mock_deny_ratio"};
      }
      break;
    case gateway::RejectionStage::exec:
      if (state.last_stage2 && state.last_stage2->verdict) {
        sig.flags = state.last_stage2->verdict->flags;
      } else {
        sig.flags = {"hard_block"};
      }
      break;
    case gateway::RejectionStage::post:
      if (state.last_stage3) {
        sig.signals = state.last_stage3->verdict.signals;
        sig.drift_score = state.last_stage3->verdict.drift_score;
      }
      break;
  }
  return sig;
}

bool SignatureRegistry::add(ServerSignature signature, SignatureSource source) {
  auto it = entries_.find(signature.manifest_fingerprint);
  if (it == entries_.end()) {
    std::string key = signature.manifest_fingerprint;
    entries_.emplace(std::move(key), Entry{std::move(signature), source});
    return true;
  }
  if (signature.issued_at > it->second.signature.issued_at) {
    it->second = Entry{std::move(signature), source};
    return true;
  }
  return false;
}

const ServerSignature* SignatureRegistry::check_denylist(
    const std::string& fingerprint) const {
  auto it = entries_.find(fingerprint);
  return it == entries_.end() ? nullptr : &it->second.signature;
}

std::vector<ServerSignature> SignatureRegistry::all() const {
  std::vector<ServerSignature> out;
  out.reserve(entries_.size());
  for (const auto& [fp, entry] : entries_) out.push_back(entry.signature);
  return out;
}

std::string SignatureRegistry::export_text() const {
  json sigs = json::array();
  for (const auto& [fp, entry] : entries_) {
    sigs.push_back(entry.signature.to_json());
  }
  json doc{{"schema_version", kSignatureSchemaVersion},
           {"signatures", std::move(sigs)}};
  return doc.dump() + "\n";
}

void SignatureRegistry::export_file(const std::filesystem::path& path) const {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) {
    throw SignatureError("cannot open for export: " + path.string());
  }
  out << export_text();
  out.flush();
  if (!out) throw SignatureError("export failed: " + path.string());
}

ImportReport SignatureRegistry::import_text(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw SignatureError("signature file is not a JSON object");
  }
  if (!doc.contains("schema_version") ||
      !doc["schema_version"].is_number_integer()) {
    throw SignatureError("signature file lacks an integer schema_version");
  }
  if (doc["schema_version"].get<int>() != kSignatureSchemaVersion) {
    throw SignatureError("unsupported signature file schema_version: " +
                         doc["schema_version"].dump());
  }
  if (!doc.contains("signatures") || !doc["signatures"].is_array()) {
    throw SignatureError("signature file lacks a signatures array");
  }

  ImportReport report;
  int index = 0;
  for (const auto& item : doc["signatures"]) {
    try {
      ServerSignature sig = ServerSignature::from_json(item);
      if (add(std::move(sig), SignatureSource::imported)) {
        ++report.imported;
      }
    } catch (const SignatureError& e) {
      report.skipped.emplace_back(index, e.what());
    }
    ++index;
  }
  return report;
}

ImportReport SignatureRegistry::import_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SignatureError("cannot open for import: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return import_text(buf.str());
}

}  // namespace mcpshield::signatures
