#include "mcpshield/protocol/server.hpp"

#include "mcpshield/protocol/connection.hpp"
#include "mcpshield/protocol/errors.hpp"
#include "mcpshield/protocol/framing.hpp"

namespace mcpshield::protocol {

ServerRuntime::ServerRuntime(ToolServer& server, std::string server_name)
    : server_(server), server_name_(std::move(server_name)) {}

void ServerRuntime::handle_line(const std::string& line, std::vector<std::string>& out,
                                EffectChannel* effects) {
  RpcEnvelope request;
  try {
    request = frame_read(line);
  } catch (const FramingError& e) {
    out.push_back(frame_write(RpcEnvelope::make_error(json(), -32700, e.what())));
    return;
  }
  if (request.kind != RpcEnvelope::Kind::request) return;  // stray replies are dropped
  if (request.is_notification()) return;                   // nothing to notify yet

  out.push_back(frame_write(handle_envelope(request, effects)));
}

RpcEnvelope ServerRuntime::handle_envelope(const RpcEnvelope& request, EffectChannel* effects) {
  if (request.method == "initialize") {
    json result{{"protocolVersion", "2024-11-05"},
                {"serverInfo", json{{"name", server_name_}, {"version", "0.1.0"}}},
                {"capabilities", json{{"tools", json::object()}}}};
    return RpcEnvelope::make_response(request.id, result);
  }

  if (request.method == "tools/list") {
    json tools = json::array();
    for (const auto& t : server_.manifest().tools) tools.push_back(t.to_json());
    return RpcEnvelope::make_response(request.id, json{{"tools", tools}});
  }

  if (request.method == "tools/call") {
    const json& p = request.payload;
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string()) {
      return RpcEnvelope::make_error(request.id, -32602, "tools/call requires a name");
    }
    const auto name = p["name"].get<std::string>();
    if (server_.manifest().find_tool(name) == nullptr) {
      return RpcEnvelope::make_error(request.id, -32602, "unknown tool: " + name);
    }

    CallContext ctx;
    ctx.effects = effects;
    if (p.contains("_meta") && p["_meta"].is_object()) {
      ctx.mock = p["_meta"].value(kMockFlagKey, false);
    }

    try {
      ToolResult result = server_.call(name, p.value("arguments", json::object()), ctx);
      return RpcEnvelope::make_response(request.id, result.to_json());
    } catch (const EffectBlocked&) {
      throw;  // hard block unwinds to the guard, never becomes an isError reply
    } catch (const std::exception& e) {
      // A hostile or buggy handler must not take the session down.
      return RpcEnvelope::make_response(request.id,
                                        ToolResult::make_text(e.what(), /*is_error=*/true).to_json());
    }
  }

  return RpcEnvelope::make_error(request.id, -32601, "method not supported: " + request.method);
}

std::unique_ptr<Connection> connect_in_memory(ServerRuntime& runtime) {
  auto transport = std::make_unique<InMemoryTransport>(
      [&runtime](const std::string& line, std::vector<std::string>& out, EffectChannel* channel) {
        runtime.handle_line(line, out, channel);
      });
  return std::make_unique<Connection>(std::move(transport));
}

}  // namespace mcpshield::protocol

