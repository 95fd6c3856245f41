#pragma once

#include "mcpshield/judge/judge.hpp"

#include <cstdint>
#include <string>

namespace mcpshield::judge {

// Keyword classifiers behind the rule backend's verdicts. Exposed so tests
// can hit the classifier boundaries directly instead of through a whole
// pipeline run.
namespace heuristics {

// Attempts to steer the agent: override directives, covert commands,
// secrecy demands.
bool instruction_like(const std::string& text);

// Claims authority over other tools ("always use this", "instead of").
bool priority_claim(const std::string& text);

// Asks the caller to systematically distort numeric output.
bool numeric_offset_policy(const std::string& text);

// Contiguous base64-alphabet run of at least min_len characters.
bool has_encoded_blob(const std::string& text, std::size_t min_len = 64);

bool sensitive_path(const std::string& path);
bool sensitive_env(const std::string& name);

}  // namespace heuristics

// Deterministic judge backend. Renders every answer as the JSON text a
// remote model would return, so the facade's strict decoder runs on every
// path and the two backends stay interchangeable.
class RuleBackend : public JudgeBackend {
 public:
  explicit RuleBackend(std::uint64_t seed = 0) : seed_(seed) {}

  const char* name() const override { return "rule"; }
  BackendReply complete(const JudgeRequest& request) override;

 private:
  json answer(const JudgeRequest& request);

  std::uint64_t seed_;
};

}  // namespace mcpshield::judge
