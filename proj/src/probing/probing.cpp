#include "mcpshield/probing/probing.hpp"

#include "mcpshield/projection/guard.hpp"
#include "mcpshield/protocol/errors.hpp"

#include <stdexcept>

namespace mcpshield::probing {

json ProbeArtifact::to_json() const {
  return json{
      {"metadata", metadata.to_json()},
      {"mock_args", mock_args},
      {"output", output ? output->to_json() : json()},
      {"probe_events", probe_events.to_json()},
      {"error", error ? json(*error) : json()},
  };
}

DenyScore compute_deny_score(const std::vector<judge::PerMockVerdict>& verdicts) {
  if (verdicts.empty()) {
    throw std::invalid_argument("deny score over zero verdicts");
  }
  DenyScore score;
  score.total = verdicts.size();
  for (const auto& v : verdicts) {
    if (v.denied()) ++score.denied;
  }
  return score;
}

const char* stage1_outcome_name(Stage1Decision::Outcome outcome) {
  switch (outcome) {
    case Stage1Decision::Outcome::rejected_by_score: return "rejected_by_score";
    case Stage1Decision::Outcome::rejected_by_manifest:
      return "rejected_by_manifest";
    case Stage1Decision::Outcome::trusted: return "trusted";
  }
  return "unknown";
}

json Stage1Decision::to_json() const {
  json probe_list = json::array();
  for (const auto& [artifact, verdict] : probes) {
    probe_list.push_back(json{{"artifact", artifact.to_json()},
                              {"verdict", verdict.to_json()}});
  }
  json out{
      {"outcome", stage1_outcome_name(outcome)},
      {"deny_score", json{{"denied", deny_score.denied},
                          {"total", deny_score.total},
                          {"value", deny_score.value()}}},
      {"probes", std::move(probe_list)},
  };
  if (manifest_verdict) out["manifest_verdict"] = manifest_verdict->to_json();
  return out;
}

ProbeArtifact run_probe(protocol::Connection& conn,
                        const protocol::ToolMetadata& tool,
                        const json& mock_args, int result_max_chars,
                        std::chrono::milliseconds timeout) {
  ProbeArtifact artifact;
  artifact.metadata = tool;
  artifact.mock_args = mock_args;

  projection::Guard guard(projection::Scope{}, projection::GuardMode::capture);
  protocol::EffectChannelScope installed(conn, &guard);
  try {
    protocol::CallOptions options;
    options.mock = true;
    options.timeout = timeout;
    protocol::ToolResult result = conn.call_tool(tool.name, mock_args, options);
    if (result_max_chars > 0) {
      std::string text = result.text();
      if (text.size() > static_cast<std::size_t>(result_max_chars)) {
        result = protocol::ToolResult::make_text(
            text.substr(0, static_cast<std::size_t>(result_max_chars)),
            result.is_error);
      }
    }
    artifact.output = std::move(result);
  } catch (const protocol::ProtocolError& e) {
    artifact.error = e.what();
  }
  artifact.probe_events = guard.take_trace();
  return artifact;
}

Stage1Decision run_stage1(protocol::Connection& conn,
                          const protocol::Manifest& manifest,
                          const gateway::ShieldConfig& config,
                          judge::Judge& judge) {
  Stage1Decision decision;

  std::size_t tool_count = manifest.tools.size();
  if (config.pre_tool_limit > 0) {
    tool_count = std::min(tool_count,
                          static_cast<std::size_t>(config.pre_tool_limit));
  }
  if (tool_count == 0) {
    // Nothing to probe, nothing to distrust. Zero judge spend.
    decision.outcome = Stage1Decision::Outcome::trusted;
    return decision;
  }

  auto timeout = std::chrono::seconds(config.tool_timeout_seconds);
  for (std::size_t t = 0; t < tool_count; ++t) {
    const protocol::ToolMetadata& tool = manifest.tools[t];
    judge::MockBatch batch = judge.build_mocks(tool, config.pre_mock_count);
    for (const json& args : batch.mocks) {
      ProbeArtifact artifact =
          run_probe(conn, tool, args, config.pre_result_max_chars, timeout);
      judge::PerMockVerdict verdict;
      if (artifact.error) {
        // A probe that never produced behavior cannot earn an ok; the fixed
        // reason keeps transport flakiness distinguishable downstream.
        verdict = {judge::PerMockVerdict::Verdict::deny,
                   "probe_transport_failure"};
      } else {
        verdict = judge.judge_mock(tool, artifact);
      }
      decision.probes.emplace_back(std::move(artifact), std::move(verdict));
    }
  }

  std::vector<judge::PerMockVerdict> verdicts;
  verdicts.reserve(decision.probes.size());
  for (const auto& [artifact, verdict] : decision.probes) {
    verdicts.push_back(verdict);
  }
  decision.deny_score = compute_deny_score(verdicts);

  if (decision.deny_score.rejects(config.pre_deny_ratio)) {
    decision.outcome = Stage1Decision::Outcome::rejected_by_score;
    return decision;
  }

  json mock_results = json::array();
  for (const auto& [artifact, verdict] : decision.probes) {
    mock_results.push_back(json{
        {"tool_name", artifact.metadata.name},
        {"arguments", artifact.mock_args},
        {"result", artifact.output ? artifact.output->to_json() : json()},
        {"error", artifact.error ? json(*artifact.error) : json()},
        {"verdict", verdict.denied() ? "deny" : "ok"},
        {"reason", verdict.reason},
    });
  }
  decision.manifest_verdict = judge.judge_manifest(manifest, mock_results);
  decision.outcome = decision.manifest_verdict->trusted
                         ? Stage1Decision::Outcome::trusted
                         : Stage1Decision::Outcome::rejected_by_manifest;
  return decision;
}

}  // namespace mcpshield::probing
