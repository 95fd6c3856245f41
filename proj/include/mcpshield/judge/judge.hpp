#pragma once

#include "mcpshield/judge/decode.hpp"
#include "mcpshield/judge/verdicts.hpp"
#include "mcpshield/periodic/payload.hpp"
#include "mcpshield/probing/artifact.hpp"
#include "mcpshield/projection/events.hpp"
#include "mcpshield/protocol/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mcpshield::judge {

struct JudgeRequest {
  SchemaId schema = SchemaId::per_mock_verdict;
  std::string system;
  json user = json::object();
};

struct BackendReply {
  std::string content;
  // Provider-reported token counts when the backend has them (remote API);
  // absent means the facade estimates from text length.
  std::optional<std::uint64_t> prompt_tokens;
  std::optional<std::uint64_t> completion_tokens;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual const char* name() const = 0;
  virtual BackendReply complete(const JudgeRequest& request) = 0;
};

// One entry per backend round trip, kept for audit payloads and tests.
struct Exchange {
  SchemaId schema;
  bool ok = false;          // decoded cleanly
  std::string error;        // decode/backend failure description
};

// Front door for every model decision the gateway makes. Owns prompt
// construction, strict decoding, usage accounting, and the fail-safe
// substitutions when the backend misbehaves. Backends never get to pick
// the failure semantics; a backend exception or undecodable reply always
// degrades toward rejection (or an empty grant), never toward trust.
class Judge {
 public:
  explicit Judge(std::unique_ptr<JudgeBackend> backend, std::uint64_t seed = 0);

  MockBatch build_mocks(const protocol::ToolMetadata& tool, int mock_count);
  PerMockVerdict judge_mock(const protocol::ToolMetadata& tool,
                            const probing::ProbeArtifact& artifact);
  ManifestVerdict judge_manifest(const protocol::Manifest& manifest,
                                 const json& mock_results);
  DomainGrant grant_domains(const std::string& server_id,
                            const std::string& tool_name,
                            const json& arguments);
  ExecVerdict judge_execution(const std::string& server_id,
                              const std::string& tool_name,
                              const json& arguments,
                              const projection::ExecutionTrace& trace);
  DriftVerdict judge_drift(const periodic::DriftPayload& payload);

  // Cumulative cost across every complete() call, including failed ones.
  JudgeUsage usage_snapshot() const { return usage_; }
  std::uint64_t call_count() const { return calls_; }
  const std::vector<Exchange>& exchanges() const { return exchanges_; }
  const char* backend_name() const { return backend_->name(); }

 private:
  // Runs one round trip and decodes; on any failure returns the decode
  // error so the caller can substitute its fail-safe value.
  DecodeResult run(SchemaId schema, const char* system, json user);

  std::unique_ptr<JudgeBackend> backend_;
  std::uint64_t seed_;
  JudgeUsage usage_;
  std::uint64_t calls_ = 0;
  std::vector<Exchange> exchanges_;
};

}  // namespace mcpshield::judge
