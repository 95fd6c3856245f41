#include "mcpshield/protocol/connection.hpp"

#include "mcpshield/protocol/errors.hpp"
#include "mcpshield/protocol/framing.hpp"
#include "mcpshield/protocol/schema.hpp"

namespace mcpshield::protocol {

namespace {
constexpr std::chrono::milliseconds kHandshakeTimeout{10'000};
}

Connection::Connection(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {}

json Connection::initialize() {
  json params{{"protocolVersion", "2024-11-05"},
              {"clientInfo", json{{"name", "mcpshield"}, {"version", "0.1.0"}}},
              {"capabilities", json::object()}};
  auto reply = round_trip(RpcEnvelope::make_request(json(next_id_++), "initialize", params),
                          kHandshakeTimeout);
  initialized_ = true;
  return reply.payload;
}

Manifest Connection::list_tools(const std::string& server_id) {
  if (!initialized_) initialize();
  auto reply = round_trip(
      RpcEnvelope::make_request(json(next_id_++), "tools/list", json::object()), kHandshakeTimeout);
  if (!reply.payload.is_object() || !reply.payload.contains("tools")) {
    throw ProtocolError("tools/list reply lacks a tools array");
  }
  Manifest m = Manifest::from_json(json{{"tools", reply.payload["tools"]}});
  m.server_id = server_id;
  manifest_ = m;
  return m;
}

void Connection::set_effect_channel(EffectChannel* channel) {
  effects_ = channel;
  transport_->set_effect_channel(channel);
}

ToolResult Connection::call_tool(const std::string& name, const json& arguments,
                                 const CallOptions& options) {
  // Local guards first: neither an unknown tool nor bad arguments produce
  // wire traffic.
  if (!manifest_.has_value()) throw ProtocolError("call_tool before list_tools");
  const ToolMetadata* tool = manifest_->find_tool(name);
  if (tool == nullptr) throw ProtocolError("unknown tool: " + name);
  if (auto violation = validate_arguments(tool->input_schema, arguments)) {
    throw ProtocolError("schema violation for " + name + ": " + *violation);
  }

  json params{{"name", name}, {"arguments", arguments}};
  if (options.mock) params["_meta"] = json{{kMockFlagKey, true}};

  const auto started = std::chrono::steady_clock::now();
  auto reply =
      round_trip(RpcEnvelope::make_request(json(next_id_++), "tools/call", params), options.timeout);
  const auto elapsed = std::chrono::steady_clock::now() - started;
  if (elapsed > options.timeout) {
    // In-process servers respond synchronously, so a deadline can only be
    // noticed after the fact; late results are discarded either way.
    throw TimeoutError("tool call exceeded deadline: " + name);
  }
  return ToolResult::from_json(reply.payload);
}

RpcEnvelope Connection::round_trip(const RpcEnvelope& request, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  transport_->write_line(frame_write(request));

  for (;;) {
    auto now = std::chrono::steady_clock::now();
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    if (remaining.count() < 0) remaining = std::chrono::milliseconds(0);

    auto line = transport_->read_line(remaining);
    if (!line.has_value()) throw TransportError("connection closed before reply");

    RpcEnvelope envelope = frame_read(*line);

    if (envelope.kind == RpcEnvelope::Kind::request) {
      if (envelope.method == "effects/attempt" && !envelope.id.is_null()) {
        // Interposed permission request from the server side.
        const json& p = envelope.payload;
        EffectReply verdict = EffectReply::deny_continue;
        if (effects_ != nullptr && p.is_object()) {
          verdict = effects_->effect_attempt(p.value("kind", ""), p.value("target", ""),
                                             p.value("detail", ""));
        }
        const bool allowed = verdict == EffectReply::allow;
        transport_->write_line(
            frame_write(RpcEnvelope::make_response(envelope.id, json{{"allowed", allowed}})));
        if (verdict == EffectReply::deny_stop) {
          throw EffectBlocked{p.value("kind", ""), p.value("target", "")};
        }
        continue;
      }
      if (envelope.is_notification() && envelope.method == "notifications/effect") {
        const json& p = envelope.payload;
        if (effects_ != nullptr && p.is_object()) {
          bool keep_going = effects_->effect_declared(p.value("kind", ""), p.value("target", ""),
                                                      p.value("detail", ""));
          if (!keep_going) throw EffectBlocked{p.value("kind", ""), p.value("target", "")};
        }
        continue;  // with no channel installed, declarations are dropped
      }
      if (envelope.is_notification()) continue;  // unrelated notifications are ignored
      throw ProtocolError("unexpected server request: " + envelope.method);
    }

    // Response or error: the id must pair with the outstanding request.
    if (envelope.id != request.id) {
      throw ProtocolError("reply id does not match outstanding request");
    }
    if (envelope.kind == RpcEnvelope::Kind::error) {
      throw ProtocolError("server error " + envelope.payload["code"].dump() + ": " +
                          envelope.payload.value("message", ""));
    }
    return envelope;
  }
}

}  // namespace mcpshield::protocol
