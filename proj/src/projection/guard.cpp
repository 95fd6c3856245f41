#include "mcpshield/projection/guard.hpp"

#include "mcpshield/protocol/errors.hpp"

#include <fstream>

namespace mcpshield::projection {

namespace fs = std::filesystem;

protocol::EffectReply Guard::effect_attempt(const std::string& kind,
                                            const std::string& target,
                                            const std::string& detail) {
  return handle(kind, target, detail);
}

bool Guard::effect_declared(const std::string& kind, const std::string& target,
                            const std::string& detail) {
  // A declaration reports something that already happened, so there is
  // nothing to realize; the only question is whether the session may go on.
  return handle(kind, target, detail) != protocol::EffectReply::deny_stop;
}

protocol::EffectReply Guard::handle(const std::string& kind,
                                    const std::string& target,
                                    const std::string& detail) {
  auto parsed = event_kind_from_name(kind);
  if (!parsed) {
    // Not part of the effect vocabulary; refuse without recording or
    // escalating. Cooperating servers never send these.
    return protocol::EffectReply::deny_continue;
  }

  CheckResult check = check_event(*parsed, target, scope_);
  trace_.events.push_back(
      {next_seq_++, *parsed, target, detail, check.allowed});

  switch (mode_) {
    case GuardMode::capture:
      // Probes observe intent only; nothing is ever authorized.
      return protocol::EffectReply::deny_continue;
    case GuardMode::permissive:
      realize(*parsed, target, detail);
      return protocol::EffectReply::allow;
    case GuardMode::enforce:
      if (check.allowed) {
        realize(*parsed, target, detail);
        return protocol::EffectReply::allow;
      }
      trace_.hard_blocked =
          HardBlock{trace_.events.size() - 1, check.reason};
      return protocol::EffectReply::deny_stop;
  }
  return protocol::EffectReply::deny_continue;
}

void Guard::realize(EventKind kind, const std::string& target,
                    const std::string& detail) {
  // Only file effects have anything to materialize, and only inside the
  // workspace: an allowed external path (explicit allowlist entry) is still
  // simulated so a test run can never scribble outside its sandbox.
  if (scope_.workspace_root.empty()) return;
  fs::path resolved = resolve_target(target, scope_.workspace_root);
  bool inside = false;
  for (fs::path walk = resolved; !walk.empty(); walk = walk.parent_path()) {
    if (walk == scope_.workspace_root) {
      inside = true;
      break;
    }
    if (walk == walk.parent_path()) break;
  }
  if (!inside) return;

  std::error_code ec;
  switch (kind) {
    case EventKind::file_write: {
      fs::create_directories(resolved.parent_path(), ec);
      std::ofstream out(resolved, std::ios::trunc);
      out << detail;
      break;
    }
    case EventKind::file_delete:
      fs::remove(resolved, ec);
      break;
    default:
      break;  // reads and non-file kinds have no materialization
  }
}

GuardedResult execute_guarded(protocol::Connection& conn,
                              const std::string& tool_name,
                              const json& arguments, const Scope& scope,
                              GuardMode mode,
                              const protocol::CallOptions& options) {
  Guard guard(scope, mode);
  protocol::EffectChannelScope installed(conn, &guard);

  GuardedResult out;
  try {
    out.result = conn.call_tool(tool_name, arguments, options);
  } catch (const protocol::EffectBlocked&) {
    // Trace already carries the block; fall through.
  } catch (const protocol::ProtocolError& e) {
    out.error = e.what();
  }
  out.trace = guard.take_trace();
  if (out.error) out.trace.error = out.error;
  return out;
}

const char* stage2_outcome_name(Stage2Decision::Outcome outcome) {
  switch (outcome) {
    case Stage2Decision::Outcome::hard_blocked: return "hard_blocked";
    case Stage2Decision::Outcome::trusted_all_whitelisted:
      return "trusted_all_whitelisted";
    case Stage2Decision::Outcome::trusted_by_analysis:
      return "trusted_by_analysis";
    case Stage2Decision::Outcome::rejected_by_analysis:
      return "rejected_by_analysis";
  }
  return "unknown";
}

json Stage2Decision::to_json() const {
  json out{{"outcome", stage2_outcome_name(outcome)},
           {"trace", trace.to_json()}};
  if (verdict) out["verdict"] = verdict->to_json();
  return out;
}

Stage2Decision analyze_execution(judge::Judge& judge,
                                 const std::string& server_id,
                                 const std::string& tool_name,
                                 const json& arguments, ExecutionTrace trace,
                                 bool trace_whitelisted) {
  Stage2Decision decision;
  decision.trace = std::move(trace);

  if (decision.trace.hard_blocked) {
    decision.outcome = Stage2Decision::Outcome::hard_blocked;
    return decision;
  }

  if (trace_whitelisted) {
    bool all_benign = true;
    for (const auto& ev : decision.trace.events) {
      bool benign = ev.in_scope && (ev.kind == EventKind::file_read ||
                                    ev.kind == EventKind::file_write);
      if (!benign) {
        all_benign = false;
        break;
      }
    }
    if (all_benign) {
      decision.outcome = Stage2Decision::Outcome::trusted_all_whitelisted;
      return decision;
    }
  }

  decision.verdict =
      judge.judge_execution(server_id, tool_name, arguments, decision.trace);
  decision.outcome = decision.verdict->trusted
                         ? Stage2Decision::Outcome::trusted_by_analysis
                         : Stage2Decision::Outcome::rejected_by_analysis;
  return decision;
}

}  // namespace mcpshield::projection
