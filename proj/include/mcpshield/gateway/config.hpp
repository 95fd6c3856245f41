#pragma once

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcpshield::gateway {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every knob the gateway honors. Defaults are the defended profile; the
// undefended baseline used for overhead measurement turns all three stages
// off together (the stage toggles are not meant to be mixed and matched,
// since cost accounting assumes earlier stages gate later ones).
struct ShieldConfig {
  // Stage 1: pre-invocation mock probing.
  bool pre_enabled = true;
  int pre_mock_count = 4;          // mocks per tool
  int pre_tool_limit = 0;          // 0 = probe every tool
  int pre_result_max_chars = 0;    // 0 = no truncation before judging
  double pre_deny_ratio = 0.5;     // reject when deny share >= this

  // Stage 2: execution-time enforcement.
  bool exec_enabled = true;
  bool exec_trace_whitelisted = false;  // skip analysis for benign-only traces

  // Stage 3: periodic drift reasoning.
  bool post_enabled = true;
  int post_k = 3;                  // assessment cadence (recent window)
  int post_baseline = 5;           // baseline window length
  int post_threshold = 4;          // drift score that rejects
  int post_output_max_chars = 800;
  bool post_include_output = true;

  // Scope material merged into every per-call grant.
  std::vector<std::string> allowed_domains;
  std::vector<std::string> allowed_paths;

  // Workspace handling.
  bool persist_workspace = true;   // false = fresh per invocation, wiped after
  bool link_inputs = true;
  std::vector<std::string> input_paths;

  std::string trace_mode = "interposed";  // or "declared"
  int tool_timeout_seconds = 120;

  // Judge wiring.
  std::string judge_backend = "rule";     // or "remote"
  std::uint64_t judge_seed = 0;
  std::string judge_endpoint;
  std::string judge_model;
  std::string judge_api_key;

  void apply_kv(const std::string& key, const std::string& value);
  void validate() const;
  json to_json() const;

  static ShieldConfig defaults() { return ShieldConfig{}; }
  // Profile for long-horizon monitoring runs: cheaper probing, whitelisted
  // trace shortcut, and a pinned domain allowlist.
  static ShieldConfig monitoring_profile();
  // All stages off; used to measure undefended cost.
  static ShieldConfig passthrough_profile();
};

// Flat key=value format, one pair per line. '#' starts a comment, blank
// lines are skipped, unknown keys and malformed values raise ConfigError
// with the offending line number.
ShieldConfig parse_config_text(const std::string& text);
ShieldConfig load_config_file(const std::string& path);

}  // namespace mcpshield::gateway
