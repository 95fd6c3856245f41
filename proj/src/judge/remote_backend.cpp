#include "mcpshield/judge/remote_backend.hpp"

#include <httplib.h>

namespace mcpshield::judge {

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  const std::string& ep = config_.endpoint;
  auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos) {
    throw RemoteError("endpoint must include a scheme: " + ep);
  }
  std::string scheme = ep.substr(0, scheme_end);
  if (scheme != "http") {
    // TLS termination belongs to a local proxy; this adapter speaks plain
    // HTTP so the vendored client stays dependency-free.
    throw RemoteError("unsupported endpoint scheme '" + scheme +
                      "' (only http is supported)");
  }
  auto path_start = ep.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = ep;
    path_ = "/v1/chat/completions";
  } else {
    base_ = ep.substr(0, path_start);
    path_ = ep.substr(path_start);
  }
}

BackendReply RemoteBackend::complete(const JudgeRequest& request) {
  json body{
      {"model", config_.model},
      {"temperature", 0},
      {"messages",
       json::array({json{{"role", "system"}, {"content", request.system}},
                    json{{"role", "user"}, {"content", request.user.dump()}}})},
  };

  httplib::Client client(base_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw RemoteError("request to " + base_ + path_ + " failed: " +
                      httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    // Body may be provider diagnostics; safe to surface, the key never
    // appears in responses.
    throw RemoteError("judge endpoint returned " +
                      std::to_string(res->status) + ": " + res->body);
  }

  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw RemoteError("judge endpoint returned invalid JSON");
  }
  BackendReply reply;
  try {
    reply.content =
        parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw RemoteError("judge response missing choices[0].message.content");
  }
  if (parsed.contains("usage") && parsed["usage"].is_object()) {
    const json& usage = parsed["usage"];
    if (usage.contains("prompt_tokens") &&
        usage["prompt_tokens"].is_number_unsigned()) {
      reply.prompt_tokens = usage["prompt_tokens"].get<std::uint64_t>();
    }
    if (usage.contains("completion_tokens") &&
        usage["completion_tokens"].is_number_unsigned()) {
      reply.completion_tokens = usage["completion_tokens"].get<std::uint64_t>();
    }
  }
  return reply;
}

}  // namespace mcpshield::judge
