#pragma once

#include "mcpshield/gateway/audit.hpp"
#include "mcpshield/gateway/config.hpp"
#include "mcpshield/gateway/trust_state.hpp"
#include "mcpshield/periodic/history.hpp"
#include "mcpshield/signatures/signatures.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace mcpshield::gateway {

struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// What the agent gets instead of a tool result when a gate closed.
struct Refusal {
  std::string stage;  // denylist | pre | exec | post | proxy
  std::string reason;
  std::vector<std::string> flags;

  json to_json() const;
};

struct CallOutcome {
  std::optional<protocol::ToolResult> result;
  std::optional<Refusal> refusal;

  bool ok() const { return result.has_value(); }
};

struct ListOutcome {
  std::optional<protocol::Manifest> manifest;
  std::optional<Refusal> refusal;
};

// Judge spend attributed to one stage of one server. `ran` distinguishes a
// stage that never executed from one that executed for free.
struct StageUsage {
  bool ran = false;
  judge::JudgeUsage usage;
  std::uint64_t judge_calls = 0;

  json to_json() const;
};

struct ServerUsage {
  StageUsage pre;
  StageUsage exec;
  StageUsage post;

  json to_json() const;
};

// The security boundary between an agent and its tool servers. Owns the
// judge, the audit log, the signature denylist, per-server histories and
// workspaces. All policy decisions funnel through here; the protocol layer
// underneath stays mechanism-only.
class Gateway {
 public:
  Gateway(ShieldConfig config, std::filesystem::path state_dir,
          std::unique_ptr<judge::Judge> judge);

  // Registers an open connection under a local server id. The id is chosen
  // by the operator and never influences fingerprints.
  void attach_server(const std::string& server_id,
                     std::unique_ptr<protocol::Connection> connection);

  // Fetch manifest, check the denylist, then stage-1 probing. Idempotent for
  // admitted servers; absorbing for rejected ones. Transport failure during
  // the fetch throws GatewayError and leaves the server unadmitted.
  const TrustState& admit_server(const std::string& server_id);

  // Manifest passthrough for admitted servers (admits on first use).
  ListOutcome proxy_tools_list(const std::string& server_id);

  // The full guarded invocation: fingerprint re-check (manifest drift forces
  // re-admission), domain grant, scoped execution, trace analysis, history
  // append, and the periodic drift gate.
  CallOutcome guarded_call(const std::string& server_id,
                           const std::string& tool_name,
                           const json& arguments);

  const TrustState& state(const std::string& server_id) const;
  const periodic::History& history(const std::string& server_id) const;
  const ServerUsage& usage(const std::string& server_id) const;

  signatures::SignatureRegistry& registry() { return registry_; }
  AuditLog& audit_log() { return audit_; }
  judge::Judge& judge() { return *judge_; }
  const ShieldConfig& config() const { return config_; }
  const std::filesystem::path& state_dir() const { return state_dir_; }

 private:
  struct Session {
    std::unique_ptr<protocol::Connection> connection;
    TrustState state;
    periodic::History history;
    ServerUsage usage;
    std::filesystem::path workspace;  // persistent variant; empty until used
  };

  Session& require_session(const std::string& server_id);
  const Session& require_session(const std::string& server_id) const;

  // Runs stage 1 against a freshly fetched manifest; moves the session to
  // Admitted or Rejected and writes the audit trail. The session must be in
  // Probing when called.
  void run_admission(Session& session, const protocol::Manifest& manifest);

  // Finalizes a rejection: records stage and reason, emits and persists the
  // signature, audits it.
  void reject(Session& session, RejectionStage stage, std::string reason,
              const json& evidence);

  Refusal refusal_for(const Session& session) const;
  std::filesystem::path workspace_for(Session& session, bool ephemeral,
                                      std::uint64_t call_seq);
  void append_invocation(Session& session, const std::string& tool_name,
                         const json& arguments,
                         const protocol::ToolResult* result, bool errored,
                         const projection::ExecutionTrace& trace);

  ShieldConfig config_;
  std::filesystem::path state_dir_;
  std::unique_ptr<judge::Judge> judge_;
  AuditLog audit_;
  signatures::SignatureRegistry registry_;
  std::map<std::string, Session> sessions_;
};

}  // namespace mcpshield::gateway
