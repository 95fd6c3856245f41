#pragma once

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mcpshield::judge {

using json = nlohmann::json;

// Closed vocabulary for drift signals. Decoding rejects anything outside it;
// signatures inherit the same closure.
inline constexpr std::array<const char*, 11> kSignalWhitelist = {
    "manifest_change",  "tool_count_change", "new_domain",          "new_ip_connect",
    "output_shift",     "error_spike",       "file_write",          "process_spawn",
    "file_read_sensitive", "api_key_request", "output_instruction",
};

bool is_whitelisted_signal(const std::string& signal);

struct MockBatch {
  std::string tool_name;
  std::vector<json> mocks;  // each entry is the arguments object itself
  json to_json() const;     // {"tool_name":..., "mocks":[{"arguments":...}...]}
};

struct PerMockVerdict {
  enum class Verdict { deny, ok };
  Verdict verdict = Verdict::deny;
  std::string reason;
  bool denied() const { return verdict == Verdict::deny; }
  json to_json() const;
};

struct ManifestVerdict {
  bool trusted = false;
  std::string reason;
  std::vector<std::string> flags;
  json to_json() const;
};

struct DomainGrant {
  std::vector<std::string> allowed_domains;  // lowercase hostnames, deduplicated
  json to_json() const;
};

struct ExecVerdict {
  bool trusted = false;
  std::string reason;
  std::vector<std::string> flags;
  json to_json() const;
};

struct DriftVerdict {
  int drift_score = 5;  // 1..5
  std::string reason;
  std::vector<std::string> signals;  // subset of kSignalWhitelist
  json to_json() const;
};

// Cumulative per-session accounting; monotone.
struct JudgeUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  double wall_time = 0.0;  // seconds
  json to_json() const;
};

// Fixed accounting heuristic when no provider-reported usage exists.
std::uint64_t estimate_tokens(std::size_t characters);

}  // namespace mcpshield::judge
