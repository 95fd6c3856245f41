#include "mcpshield/gateway/gateway.hpp"

#include "mcpshield/protocol/canonical.hpp"
#include "mcpshield/protocol/errors.hpp"

#include <chrono>

namespace mcpshield::gateway {

namespace fs = std::filesystem;

namespace {

std::uint64_t now_ms() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
}

std::uint64_t now_seconds() { return now_ms() / 1000; }

// Server ids become directory names; anything shady maps to '_'.
std::string sanitize_id(const std::string& id) {
  std::string out;
  out.reserve(id.size());
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

judge::JudgeUsage usage_delta(const judge::JudgeUsage& before,
                              const judge::JudgeUsage& after) {
  judge::JudgeUsage d;
  d.prompt_tokens = after.prompt_tokens - before.prompt_tokens;
  d.completion_tokens = after.completion_tokens - before.completion_tokens;
  d.wall_time = after.wall_time - before.wall_time;
  return d;
}

// Scoped per-stage accounting: everything the judge spends inside the
// region is attributed to `target` and audited when the region closes.
class UsageRegion {
 public:
  UsageRegion(judge::Judge& judge, StageUsage& target) : judge_(judge), target_(target) {
    before_ = judge_.usage_snapshot();
    calls_before_ = judge_.call_count();
  }

  judge::JudgeUsage close() {
    judge::JudgeUsage d = usage_delta(before_, judge_.usage_snapshot());
    target_.ran = true;
    target_.usage.prompt_tokens += d.prompt_tokens;
    target_.usage.completion_tokens += d.completion_tokens;
    target_.usage.wall_time += d.wall_time;
    target_.judge_calls += judge_.call_count() - calls_before_;
    return d;
  }

 private:
  judge::Judge& judge_;
  StageUsage& target_;
  judge::JudgeUsage before_;
  std::uint64_t calls_before_ = 0;
};

std::string truncate_text(const std::string& text, int max_chars) {
  if (max_chars <= 0) return text;
  if (text.size() <= static_cast<std::size_t>(max_chars)) return text;
  return text.substr(0, static_cast<std::size_t>(max_chars));
}

}  // namespace

json Refusal::to_json() const {
  return json{{"stage", stage}, {"reason", reason}, {"flags", flags}};
}

json StageUsage::to_json() const {
  json out = usage.to_json();
  out["judge_calls"] = judge_calls;
  return out;
}

json ServerUsage::to_json() const {
  // Stages that never ran are absent, not zero: the report layer must not
  // mistake "skipped" for "free".
  json out = json::object();
  if (pre.ran) out["pre"] = pre.to_json();
  if (exec.ran) out["exec"] = exec.to_json();
  if (post.ran) out["post"] = post.to_json();
  return out;
}

Gateway::Gateway(ShieldConfig config, std::filesystem::path state_dir,
                 std::unique_ptr<judge::Judge> judge)
    : config_(std::move(config)),
      state_dir_(std::move(state_dir)),
      judge_(std::move(judge)),
      audit_((fs::create_directories(state_dir_), state_dir_ / "audit.jsonl")) {
  config_.validate();
  if (!judge_) throw GatewayError("gateway needs a judge");

  fs::path signature_file = state_dir_ / "signatures.json";
  if (fs::exists(signature_file)) {
    signatures::ImportReport report = registry_.import_file(signature_file);
    if (!report.skipped.empty()) {
      json skipped = json::array();
      for (const auto& [index, reason] : report.skipped) {
        skipped.push_back(json{{"index", index}, {"reason", reason}});
      }
      audit_.append({0, "", AuditStage::denylist, "load_skipped_records",
                     std::move(skipped), std::nullopt});
    }
  }
}

void Gateway::attach_server(const std::string& server_id,
                            std::unique_ptr<protocol::Connection> connection) {
  if (!connection) throw GatewayError("null connection for " + server_id);
  if (sessions_.count(server_id)) {
    throw GatewayError("server id already attached: " + server_id);
  }
  Session session;
  session.connection = std::move(connection);
  session.state.server_id = server_id;
  session.history.server_id = server_id;
  sessions_.emplace(server_id, std::move(session));
}

Gateway::Session& Gateway::require_session(const std::string& server_id) {
  auto it = sessions_.find(server_id);
  if (it == sessions_.end()) {
    throw GatewayError("no such server attached: " + server_id);
  }
  return it->second;
}

const Gateway::Session& Gateway::require_session(
    const std::string& server_id) const {
  auto it = sessions_.find(server_id);
  if (it == sessions_.end()) {
    throw GatewayError("no such server attached: " + server_id);
  }
  return it->second;
}

const TrustState& Gateway::state(const std::string& server_id) const {
  return require_session(server_id).state;
}

const periodic::History& Gateway::history(const std::string& server_id) const {
  return require_session(server_id).history;
}

const ServerUsage& Gateway::usage(const std::string& server_id) const {
  return require_session(server_id).usage;
}

void Gateway::reject(Session& session, RejectionStage stage, std::string reason,
                     const json& evidence) {
  session.state.rejected_stage = stage;
  session.state.rejection_reason = std::move(reason);
  session.state.transition(TrustPhase::Rejected);

  signatures::ServerSignature sig =
      signatures::emit_signature(session.state, evidence, now_seconds());
  registry_.add(sig, signatures::SignatureSource::local);
  registry_.export_file(state_dir_ / "signatures.json");

  AuditStage audit_stage = stage == RejectionStage::pre    ? AuditStage::pre
                           : stage == RejectionStage::exec ? AuditStage::exec
                                                           : AuditStage::post;
  audit_.append({0, session.state.server_id, audit_stage, "signature_emitted",
                 sig.to_json(), "rejected"});
}

Refusal Gateway::refusal_for(const Session& session) const {
  Refusal refusal;
  refusal.stage = session.state.rejected_stage
                      ? rejection_stage_name(*session.state.rejected_stage)
                      : "proxy";
  refusal.reason = session.state.rejection_reason;

  const TrustState& st = session.state;
  if (st.rejected_stage == RejectionStage::pre && st.stage1 &&
      st.stage1->manifest_verdict) {
    refusal.flags = st.stage1->manifest_verdict->flags;
  } else if (st.rejected_stage == RejectionStage::exec && st.last_stage2 &&
             st.last_stage2->verdict) {
    refusal.flags = st.last_stage2->verdict->flags;
  } else if (st.rejected_stage == RejectionStage::post && st.last_stage3) {
    refusal.flags = st.last_stage3->verdict.signals;
  }
  return refusal;
}

void Gateway::run_admission(Session& session,
                            const protocol::Manifest& manifest) {
  const std::string& id = session.state.server_id;
  std::string fingerprint = protocol::fingerprint(manifest);
  session.state.manifest_fingerprint = fingerprint;

  if (const auto* hit = registry_.check_denylist(fingerprint)) {
    audit_.append({0, id, AuditStage::denylist, "hit",
                   json{{"fingerprint", fingerprint},
                        {"signature", hit->to_json()}},
                   "rejected"});
    // Known-bad manifest: carry the original stage, spend nothing new. No
    // fresh signature either; the registry already has the newest one.
    session.state.rejected_stage = hit->rejection_stage;
    session.state.rejection_reason =
        "manifest matches a denylist signature (first seen as '" +
        hit->display_name + "')";
    session.state.transition(TrustPhase::Rejected);
    return;
  }

  if (!config_.pre_enabled) {
    session.state.transition(TrustPhase::Admitted);
    session.state.admitted_manifest_fingerprint = fingerprint;
    audit_.append({0, id, AuditStage::proxy, "admitted_unprobed",
                   json{{"fingerprint", fingerprint}}, "trusted"});
    return;
  }

  UsageRegion region(*judge_, session.usage.pre);
  probing::Stage1Decision decision =
      probing::run_stage1(*session.connection, manifest, config_, *judge_);
  judge::JudgeUsage spent = region.close();

  std::string verdict = decision.trusted() ? "trusted" : "rejected";
  audit_.append({0, id, AuditStage::pre, "stage1_decision", decision.to_json(),
                 verdict});
  audit_.append({0, id, AuditStage::pre, "usage", spent.to_json(), std::nullopt});

  std::string reason;
  if (decision.outcome == probing::Stage1Decision::Outcome::rejected_by_score) {
    reason = "mock deny score " + std::to_string(decision.deny_score.denied) +
             "/" + std::to_string(decision.deny_score.total) +
             " at or above threshold";
  } else if (decision.outcome ==
             probing::Stage1Decision::Outcome::rejected_by_manifest) {
    reason = decision.manifest_verdict->reason;
  }
  json evidence = decision.to_json();
  session.state.stage1 = std::move(decision);

  if (session.state.stage1->trusted()) {
    session.state.transition(TrustPhase::Admitted);
    session.state.admitted_manifest_fingerprint = fingerprint;
  } else {
    reject(session, RejectionStage::pre, reason, evidence);
  }
}

const TrustState& Gateway::admit_server(const std::string& server_id) {
  Session& session = require_session(server_id);
  if (session.state.phase == TrustPhase::Admitted ||
      session.state.phase == TrustPhase::Rejected) {
    return session.state;
  }
  if (session.state.phase == TrustPhase::Unknown) {
    session.state.transition(TrustPhase::Probing);
  }

  protocol::Manifest manifest;
  try {
    session.connection->initialize();
    manifest = session.connection->list_tools(server_id);
  } catch (const protocol::ProtocolError& e) {
    audit_.append({0, server_id, AuditStage::pre, "manifest_fetch_error",
                   json{{"error", e.what()}}, std::nullopt});
    throw GatewayError("cannot fetch manifest from " + server_id + ": " +
                       e.what());
  }

  run_admission(session, manifest);
  return session.state;
}

ListOutcome Gateway::proxy_tools_list(const std::string& server_id) {
  Session& session = require_session(server_id);
  if (session.state.phase == TrustPhase::Unknown ||
      session.state.phase == TrustPhase::Probing) {
    admit_server(server_id);
  }
  if (session.state.phase != TrustPhase::Admitted) {
    return {std::nullopt, refusal_for(session)};
  }
  audit_.append({0, server_id, AuditStage::proxy, "tools_list", json::object(),
                 std::nullopt});
  const auto& cached = session.connection->cached_manifest();
  if (cached) return {*cached, std::nullopt};
  return {session.connection->list_tools(server_id), std::nullopt};
}

std::filesystem::path Gateway::workspace_for(Session& session, bool ephemeral,
                                             std::uint64_t call_seq) {
  std::string base = sanitize_id(session.state.server_id);
  fs::path root =
      ephemeral ? state_dir_ / "workspaces" /
                      (base + "-call" + std::to_string(call_seq))
                : state_dir_ / "workspaces" / base;
  bool fresh = !fs::exists(root);
  fs::create_directories(root);

  if (config_.link_inputs && fresh && !config_.input_paths.empty()) {
    fs::path inputs = root / "inputs";
    fs::create_directories(inputs);
    for (const auto& p : config_.input_paths) {
      fs::path src(p);
      if (!fs::exists(src)) {
        throw GatewayError("configured input path missing: " + p);
      }
      fs::copy(src, inputs / src.filename(),
               fs::copy_options::overwrite_existing |
                   fs::copy_options::recursive);
    }
  }
  if (!ephemeral) session.workspace = root;
  return root;
}

void Gateway::append_invocation(Session& session, const std::string& tool_name,
                                const json& arguments,
                                const protocol::ToolResult* result,
                                bool errored,
                                const projection::ExecutionTrace& trace) {
  periodic::InvocationRecord rec;
  rec.seq = session.history.records.size() + 1;
  rec.tool_name = tool_name;
  rec.args_digest = protocol::sha256_hex(arguments.dump());
  if (config_.post_include_output && result) {
    rec.output_summary =
        truncate_text(result->text(), config_.post_output_max_chars);
  }
  rec.output_error = errored || (result && result->is_error);
  for (const auto& ev : trace.events) {
    ++rec.event_kinds[projection::event_kind_name(ev.kind)];
    if (ev.in_scope && (ev.kind == projection::EventKind::net_connect ||
                        ev.kind == projection::EventKind::dns_resolve)) {
      rec.domains_contacted.insert(ev.target);
    }
  }
  rec.manifest_fingerprint = session.state.manifest_fingerprint;
  rec.timestamp_ms = now_ms();

  session.history.append(rec);
  periodic::append_history_line(
      rec, state_dir_ / "history" /
               (sanitize_id(session.state.server_id) + ".jsonl"));
}

CallOutcome Gateway::guarded_call(const std::string& server_id,
                                  const std::string& tool_name,
                                  const json& arguments) {
  Session& session = require_session(server_id);

  if (session.state.phase == TrustPhase::Rejected) {
    return {std::nullopt, refusal_for(session)};
  }
  if (session.state.phase != TrustPhase::Admitted) {
    return {std::nullopt,
            Refusal{"proxy",
                    std::string("server not admitted (phase ") +
                        trust_phase_name(session.state.phase) + ")",
                    {}}};
  }

  // Fingerprint re-check: a changed manifest voids the admission and the
  // whole front door runs again before this call may proceed.
  protocol::Manifest manifest;
  try {
    manifest = session.connection->list_tools(server_id);
  } catch (const protocol::ProtocolError& e) {
    audit_.append({0, server_id, AuditStage::proxy, "refetch_error",
                   json{{"error", e.what()}}, std::nullopt});
    return {protocol::ToolResult::make_text(
                std::string("manifest refetch failed: ") + e.what(), true),
            std::nullopt};
  }
  std::string fingerprint = protocol::fingerprint(manifest);
  if (fingerprint != *session.state.admitted_manifest_fingerprint) {
    audit_.append(
        {0, server_id, AuditStage::pre, "manifest_change",
         json{{"admitted", *session.state.admitted_manifest_fingerprint},
              {"current", fingerprint}},
         std::nullopt});
    session.state.transition(TrustPhase::Probing);
    session.state.admitted_manifest_fingerprint.reset();
    run_admission(session, manifest);
    if (session.state.phase != TrustPhase::Admitted) {
      return {std::nullopt, refusal_for(session)};
    }
  }

  bool ephemeral = !config_.persist_workspace;
  std::uint64_t call_seq = session.history.records.size() + 1;
  fs::path workspace = workspace_for(session, ephemeral, call_seq);

  protocol::CallOptions options;
  options.mock = false;
  options.timeout = std::chrono::seconds(config_.tool_timeout_seconds);

  CallOutcome outcome;
  // Ephemeral workspaces are wiped however the call leaves this scope.
  struct Wipe {
    fs::path root;
    bool armed;
    ~Wipe() {
      if (armed) {
        std::error_code ec;
        fs::remove_all(root, ec);
      }
    }
  } wipe{workspace, ephemeral};

  if (!config_.exec_enabled) {
    // Undefended passthrough: no grant, no analysis, no blocking. File
    // effects still realize only inside the workspace sandbox.
    projection::Scope scope;
    scope.workspace_root = workspace;
    projection::GuardedResult run = projection::execute_guarded(
        *session.connection, tool_name, arguments, scope,
        projection::GuardMode::permissive, options);
    audit_.append({0, server_id, AuditStage::proxy, "call",
                   json{{"tool_name", tool_name},
                        {"errored", run.error.has_value()}},
                   std::nullopt});
    if (run.error) {
      outcome.result = protocol::ToolResult::make_text(
          "tool call failed: " + *run.error, true);
    } else {
      outcome.result = run.result;
    }
    append_invocation(session, tool_name, arguments,
                      run.result ? &*run.result : nullptr,
                      run.error.has_value(), run.trace);
    return outcome;
  }

  UsageRegion region(*judge_, session.usage.exec);
  judge::DomainGrant grant =
      judge_->grant_domains(server_id, tool_name, arguments);
  projection::Scope scope = projection::build_scope(config_, grant, workspace);
  audit_.append({0, server_id, AuditStage::exec, "domain_grant",
                 json{{"tool_name", tool_name},
                      {"allowed_domains", grant.allowed_domains}},
                 std::nullopt});

  projection::GuardedResult run = projection::execute_guarded(
      *session.connection, tool_name, arguments, scope,
      projection::GuardMode::enforce, options);

  if (run.trace.hard_blocked) {
    projection::Stage2Decision decision;
    decision.outcome = projection::Stage2Decision::Outcome::hard_blocked;
    decision.trace = run.trace;
    judge::JudgeUsage spent = region.close();
    audit_.append({0, server_id, AuditStage::exec, "stage2_decision",
                   decision.to_json(), "rejected"});
    audit_.append(
        {0, server_id, AuditStage::exec, "usage", spent.to_json(), std::nullopt});
    std::string reason = run.trace.hard_blocked->reason;
    json evidence = decision.to_json();
    session.state.last_stage2 = std::move(decision);
    reject(session, RejectionStage::exec, reason, evidence);
    Refusal refusal = refusal_for(session);
    refusal.flags = {"hard_block"};
    return {std::nullopt, refusal};
  }

  if (run.error) {
    audit_.append({0, server_id, AuditStage::exec, "call_error",
                   json{{"tool_name", tool_name}, {"error", *run.error}},
                   std::nullopt});
  }

  projection::Stage2Decision decision = projection::analyze_execution(
      *judge_, server_id, tool_name, arguments, std::move(run.trace),
      config_.exec_trace_whitelisted);
  judge::JudgeUsage spent = region.close();

  audit_.append({0, server_id, AuditStage::exec, "stage2_decision",
                 decision.to_json(),
                 decision.trusted() ? "trusted" : "rejected"});
  audit_.append(
      {0, server_id, AuditStage::exec, "usage", spent.to_json(), std::nullopt});

  bool rejected = !decision.trusted();
  std::string exec_reason =
      decision.verdict ? decision.verdict->reason : std::string();
  json evidence = decision.to_json();
  session.state.last_stage2 = std::move(decision);

  if (rejected) {
    reject(session, RejectionStage::exec, exec_reason, evidence);
    return {std::nullopt, refusal_for(session)};
  }

  if (run.error) {
    outcome.result = protocol::ToolResult::make_text(
        "tool call failed: " + *run.error, true);
  } else {
    outcome.result = run.result;
  }

  append_invocation(session, tool_name, arguments,
                    run.error ? nullptr : (run.result ? &*run.result : nullptr),
                    run.error.has_value(),
                    session.state.last_stage2->trace);

  if (config_.post_enabled &&
      periodic::should_trigger(session.history, config_.post_baseline,
                               config_.post_k)) {
    UsageRegion post_region(*judge_, session.usage.post);
    periodic::Stage3Decision drift =
        periodic::run_stage3(*judge_, session.history, config_);
    judge::JudgeUsage post_spent = post_region.close();

    audit_.append({0, server_id, AuditStage::post, "stage3_decision",
                   drift.to_json(), stage3_outcome_name(drift.outcome)});
    audit_.append({0, server_id, AuditStage::post, "usage",
                   post_spent.to_json(), std::nullopt});

    bool drift_rejected =
        drift.outcome == periodic::Stage3Decision::Outcome::rejected_for_drift;
    std::string drift_reason = drift.verdict.reason;
    json drift_evidence = drift.to_json();
    session.state.last_stage3 = std::move(drift);

    if (drift_rejected) {
      // The triggering call is refused too: a result from a server that
      // just failed the drift gate is not returned to the agent.
      reject(session, RejectionStage::post, drift_reason, drift_evidence);
      return {std::nullopt, refusal_for(session)};
    }
  }

  return outcome;
}

}  // namespace mcpshield::gateway
