#pragma once

#include "mcpshield/judge/judge.hpp"
#include "mcpshield/projection/scope.hpp"
#include "mcpshield/protocol/connection.hpp"
#include "mcpshield/protocol/effects.hpp"

#include <optional>
#include <string>

namespace mcpshield::projection {

// How the guard reacts to effects.
//   enforce:    in-scope effects are authorized (file effects realized under
//               the workspace), violations hard-block the invocation.
//   capture:    probe mode; every attempt is recorded with its scope verdict
//               but nothing is authorized or realized and nothing blocks.
//   permissive: undefended baseline; everything is authorized, workspace
//               file effects realized, external ones merely recorded.
enum class GuardMode { enforce, capture, permissive };

class Guard final : public protocol::EffectChannel {
 public:
  Guard(Scope scope, GuardMode mode) : scope_(std::move(scope)), mode_(mode) {}

  protocol::EffectReply effect_attempt(const std::string& kind,
                                       const std::string& target,
                                       const std::string& detail) override;
  bool effect_declared(const std::string& kind, const std::string& target,
                       const std::string& detail) override;

  const ExecutionTrace& trace() const { return trace_; }
  ExecutionTrace take_trace() { return std::move(trace_); }

 private:
  protocol::EffectReply handle(const std::string& kind,
                               const std::string& target,
                               const std::string& detail);
  void realize(EventKind kind, const std::string& target,
               const std::string& detail);

  Scope scope_;
  GuardMode mode_;
  ExecutionTrace trace_;
  std::uint64_t next_seq_ = 1;
};

struct GuardedResult {
  std::optional<protocol::ToolResult> result;  // absent on block or error
  ExecutionTrace trace;
  std::optional<std::string> error;  // timeout / transport detail
};

// Runs one tool call with a guard installed on the connection. A hard block
// surfaces as result=absent with trace.hard_blocked set; timeouts and
// transport failures land in `error` with whatever trace accumulated.
GuardedResult execute_guarded(protocol::Connection& conn,
                              const std::string& tool_name,
                              const json& arguments, const Scope& scope,
                              GuardMode mode,
                              const protocol::CallOptions& options);

struct Stage2Decision {
  enum class Outcome {
    hard_blocked,
    trusted_all_whitelisted,  // benign-only trace, analysis skipped
    trusted_by_analysis,
    rejected_by_analysis,
  };

  Outcome outcome = Outcome::trusted_by_analysis;
  ExecutionTrace trace;
  std::optional<judge::ExecVerdict> verdict;  // absent when no judge call ran

  bool trusted() const {
    return outcome == Outcome::trusted_all_whitelisted ||
           outcome == Outcome::trusted_by_analysis;
  }
  json to_json() const;
};

const char* stage2_outcome_name(Stage2Decision::Outcome outcome);

// Post-execution review of a completed (not hard-blocked) trace. With
// trace_whitelisted set, a trace containing only in-scope file reads and
// writes is trusted without spending a judge call.
Stage2Decision analyze_execution(judge::Judge& judge,
                                 const std::string& server_id,
                                 const std::string& tool_name,
                                 const json& arguments, ExecutionTrace trace,
                                 bool trace_whitelisted);

}  // namespace mcpshield::projection
