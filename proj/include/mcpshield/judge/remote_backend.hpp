#pragma once

#include "mcpshield/judge/judge.hpp"

#include <stdexcept>
#include <string>

namespace mcpshield::judge {

struct RemoteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RemoteConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string model;
  std::string api_key;   // sent as a bearer token, never logged
  int timeout_seconds = 60;
};

// Chat-completions adapter. Sends the request's system prompt verbatim and
// the user payload as a compact JSON string, always at temperature 0.
// Anything other than a well-formed 200 response raises RemoteError (with
// the key redacted); the facade turns that into its fail-safe verdict.
class RemoteBackend : public JudgeBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  const char* name() const override { return "remote"; }
  BackendReply complete(const JudgeRequest& request) override;

 private:
  RemoteConfig config_;
  std::string base_;  // scheme://host:port
  std::string path_;
};

}  // namespace mcpshield::judge
