#include "mcpshield/judge/judge.hpp"

#include "mcpshield/judge/prompts.hpp"
#include "mcpshield/probing/mockgen.hpp"

#include <chrono>

namespace mcpshield::judge {

namespace {

constexpr const char* kFailReason = "judge_failure";

json artifact_user(const protocol::ToolMetadata& tool,
                   const probing::ProbeArtifact& artifact) {
  json user{
      {"tool", tool.to_json()},
      {"mock", json{{"arguments", artifact.mock_args}}},
      {"result", artifact.output ? artifact.output->to_json() : json()},
      {"probe_events", artifact.probe_events.to_json()["events"]},
      {"error", artifact.error ? json(*artifact.error) : json()},
  };
  return user;
}

json invocation_user(const std::string& server_id, const std::string& tool_name,
                     const json& arguments, const json& events) {
  return json{
      {"server_id", server_id},
      {"tool_name", tool_name},
      {"arguments", arguments},
      {"execution_events", events},
  };
}

}  // namespace

Judge::Judge(std::unique_ptr<JudgeBackend> backend, std::uint64_t seed)
    : backend_(std::move(backend)), seed_(seed) {}

DecodeResult Judge::run(SchemaId schema, const char* system, json user) {
  JudgeRequest request{schema, system, std::move(user)};
  ++calls_;

  auto start = std::chrono::steady_clock::now();
  BackendReply reply;
  std::optional<std::string> backend_error;
  try {
    reply = backend_->complete(request);
  } catch (const std::exception& e) {
    backend_error = e.what();
  }
  usage_.wall_time +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  // Provider counts win; otherwise estimate both sides from text length.
  usage_.prompt_tokens +=
      reply.prompt_tokens.value_or(estimate_tokens(request.system.size()) +
                                   estimate_tokens(request.user.dump().size()));
  usage_.completion_tokens +=
      reply.completion_tokens.value_or(estimate_tokens(reply.content.size()));

  if (backend_error) {
    exchanges_.push_back({schema, false, "backend: " + *backend_error});
    DecodeResult failed;
    failed.error = DecodeError{DecodeErrorKind::parse_failure, *backend_error};
    return failed;
  }

  DecodeResult decoded = decode_strict(reply.content, schema);
  exchanges_.push_back(
      {schema, decoded.value.has_value(),
       decoded.error ? decoded.error->message : std::string()});
  return decoded;
}

MockBatch Judge::build_mocks(const protocol::ToolMetadata& tool,
                             int mock_count) {
  json user{{"tool", tool.to_json()}, {"mock_count", mock_count}};
  DecodeResult decoded =
      run(SchemaId::mock_batch, prompts::kBuildMocks, std::move(user));

  MockBatch batch;
  batch.tool_name = tool.name;
  if (decoded.value) {
    batch = std::get<MockBatch>(*decoded.value);
    // A batch answering for some other tool is as useless as no batch.
    if (batch.tool_name != tool.name) {
      batch.mocks.clear();
      batch.tool_name = tool.name;
    }
  }

  // Fail safe: top up from the schema generator so stage 1 always has
  // exactly mock_count probes per tool, whatever the backend returned.
  if (static_cast<int>(batch.mocks.size()) > mock_count) {
    batch.mocks.resize(static_cast<std::size_t>(mock_count));
  } else if (static_cast<int>(batch.mocks.size()) < mock_count) {
    try {
      auto filler = probing::generate_schema_mocks(tool.input_schema,
                                                   mock_count, seed_);
      for (std::size_t i = batch.mocks.size();
           i < static_cast<std::size_t>(mock_count); ++i) {
        batch.mocks.push_back(filler[i]);
      }
    } catch (const probing::UnsupportedSchema&) {
      // Schema too exotic to synthesize from; pad with empty argument sets
      // so the tool still gets exercised mock_count times.
      while (static_cast<int>(batch.mocks.size()) < mock_count) {
        batch.mocks.push_back(json::object());
      }
    }
  }
  return batch;
}

PerMockVerdict Judge::judge_mock(const protocol::ToolMetadata& tool,
                                 const probing::ProbeArtifact& artifact) {
  DecodeResult decoded = run(SchemaId::per_mock_verdict, prompts::kPerMock,
                             artifact_user(tool, artifact));
  if (decoded.value) return std::get<PerMockVerdict>(*decoded.value);
  return PerMockVerdict{PerMockVerdict::Verdict::deny, kFailReason};
}

ManifestVerdict Judge::judge_manifest(const protocol::Manifest& manifest,
                                      const json& mock_results) {
  json user{{"manifest", manifest.to_json()}, {"mock_results", mock_results}};
  DecodeResult decoded =
      run(SchemaId::manifest_verdict, prompts::kManifest, std::move(user));
  if (decoded.value) return std::get<ManifestVerdict>(*decoded.value);
  return ManifestVerdict{false, kFailReason, {kFailReason}};
}

DomainGrant Judge::grant_domains(const std::string& server_id,
                                 const std::string& tool_name,
                                 const json& arguments) {
  DecodeResult decoded =
      run(SchemaId::domain_grant, prompts::kDomainGrant,
          invocation_user(server_id, tool_name, arguments, json::array()));
  if (decoded.value) return std::get<DomainGrant>(*decoded.value);
  return DomainGrant{};  // no grant: strictly tighter than any answer
}

ExecVerdict Judge::judge_execution(const std::string& server_id,
                                   const std::string& tool_name,
                                   const json& arguments,
                                   const projection::ExecutionTrace& trace) {
  DecodeResult decoded =
      run(SchemaId::exec_verdict, prompts::kExecution,
          invocation_user(server_id, tool_name, arguments,
                          trace.to_json()["events"]));
  if (decoded.value) return std::get<ExecVerdict>(*decoded.value);
  return ExecVerdict{false, kFailReason, {kFailReason}};
}

DriftVerdict Judge::judge_drift(const periodic::DriftPayload& payload) {
  DecodeResult decoded =
      run(SchemaId::drift_verdict, prompts::kDrift, payload.to_json());
  if (decoded.value) return std::get<DriftVerdict>(*decoded.value);
  return DriftVerdict{5, kFailReason, {}};
}

}  // namespace mcpshield::judge
