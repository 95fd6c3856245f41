#pragma once

#include "mcpshield/gateway/gateway.hpp"
#include "mcpshield/harness/fixtures.hpp"
#include "mcpshield/judge/judge.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mcpshield::harness {

// Result of driving one fixture through one gateway until the budget runs out
// or a gate closes.
struct EvalOutcome {
  std::string server_id;
  Family family = Family::benign;
  std::string surface;
  int repeat = 0;
  bool malicious = false;

  bool detected = false;
  std::optional<std::string> detection_stage;      // pre | exec | post | denylist | proxy
  std::optional<int> calls_until_detection;        // 0 = refused during admission
  int calls_completed = 0;

  // A fixture that cannot be driven at all (transport breakage, gateway
  // refusal to attach) is an infrastructure failure and never counts as a
  // detection or an evasion.
  bool infrastructure_error = false;
  std::string infrastructure_detail;

  json usage;  // per-stage judge spend; stages that never ran are absent

  json to_json() const;
};

// Fraction of malicious runs that made it through every gate undetected.
// Infrastructure errors are excluded from the denominator. Throws
// std::invalid_argument when nothing malicious remains to score.
double compute_asr(const std::vector<EvalOutcome>& outcomes);

struct SuiteOptions {
  int repeats = 1;
  int steps = 15;  // benign call budget; malicious fixtures get steps + post_k - 1
  std::uint64_t seed = 1;
  std::vector<int> pass_at = {1, 3};
  bool measure_overhead = false;
};

struct SuiteReport {
  double asr = 0.0;
  double benign_deny_rate = 0.0;
  std::map<std::string, std::string> family_stage;  // first repeat: family -> stage or "undetected"
  std::map<int, double> pass_at_k;
  std::vector<EvalOutcome> outcomes;  // all repeats, suite order
  json overhead;                      // null unless measured

  json to_json() const;
  std::string to_table() const;
};

// Builds the judge the config asks for (rule or remote backend).
std::unique_ptr<judge::Judge> make_judge(const gateway::ShieldConfig& config);

// Per-fixture config: rug-pull runs need the long-horizon monitoring profile,
// everything else uses the base config unchanged. Only substitutes when the
// base config is actually defending (a passthrough baseline stays passthrough).
gateway::ShieldConfig config_for(const FixtureSpec& spec, const gateway::ShieldConfig& base);

// Deterministic, schema-valid arguments for driving a tool in the open loop.
// Well-known property names get realistic canned values, the rest fall back
// to type defaults.
json representative_args(const protocol::ToolMetadata& tool);

// Runs every spec against a fresh gateway, `repeats` times, with fixture
// seeds shifted per repeat so Pass@K exercises genuinely different runs.
// Gateway state lands under state_root/r<N>/<server-id>.
SuiteReport run_suite(const gateway::ShieldConfig& base_config,
                      const std::vector<FixtureSpec>& specs, const SuiteOptions& options,
                      const std::filesystem::path& state_root);

// Defended-vs-passthrough cost comparison over the benign members of `specs`.
// Reports wall time and judge token spend against an undefended baseline.
json measure_overhead(const gateway::ShieldConfig& base_config,
                      const std::vector<FixtureSpec>& specs, const SuiteOptions& options,
                      const std::filesystem::path& state_root);

}  // namespace mcpshield::harness
