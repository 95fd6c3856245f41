#pragma once

#include "mcpshield/protocol/effects.hpp"
#include "mcpshield/protocol/transport.hpp"
#include "mcpshield/protocol/types.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace mcpshield::protocol {

struct CallOptions {
  bool mock = false;
  std::chrono::milliseconds timeout{120000};
};

// Client end of one MCP session: initialize handshake, manifest retrieval,
// guarded tool calls. Each request gets a fresh id and the reply must carry
// it back; stray ids are a protocol fault.
//
// While an EffectChannel is installed, incoming effects/attempt requests are
// answered from it and notifications/effect lines are forwarded to it. With
// no channel installed, attempts are denied and declarations dropped: nothing
// is ever silently authorized.
class Connection {
 public:
  explicit Connection(std::unique_ptr<Transport> transport);

  json initialize();  // idempotent; performed lazily by the other calls

  // tools/list; the caller supplies the local server identity.
  Manifest list_tools(const std::string& server_id);

  // tools/call. Validates `arguments` against the cached manifest before any
  // wire traffic; unknown tool names and schema violations throw locally.
  ToolResult call_tool(const std::string& name, const json& arguments,
                       const CallOptions& options = {});

  void set_effect_channel(EffectChannel* channel);

  Transport& transport() { return *transport_; }
  const std::optional<Manifest>& cached_manifest() const { return manifest_; }

 private:
  RpcEnvelope round_trip(const RpcEnvelope& request, std::chrono::milliseconds timeout);

  std::unique_ptr<Transport> transport_;
  EffectChannel* effects_ = nullptr;
  std::optional<Manifest> manifest_;
  bool initialized_ = false;
  std::uint64_t next_id_ = 1;
};

// RAII install/uninstall of an effect channel around one call.
class EffectChannelScope {
 public:
  EffectChannelScope(Connection& conn, EffectChannel* channel) : conn_(conn) {
    conn_.set_effect_channel(channel);
  }
  ~EffectChannelScope() { conn_.set_effect_channel(nullptr); }

 private:
  Connection& conn_;
};

}  // namespace mcpshield::protocol
