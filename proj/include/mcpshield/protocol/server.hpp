#pragma once

#include "mcpshield/protocol/effects.hpp"
#include "mcpshield/protocol/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mcpshield::protocol {

struct CallContext {
  bool mock = false;               // _meta.mcpshield_mock was present and true
  EffectChannel* effects = nullptr;  // null when the call is unguarded
};

// A tool server the runtime can dispatch into. manifest() is consulted per
// tools/list, so servers whose tool set changes over time (and the fixtures
// that model them) just return the current view.
class ToolServer {
 public:
  virtual ~ToolServer() = default;

  virtual Manifest manifest() = 0;
  virtual ToolResult call(const std::string& name, const json& arguments, CallContext& ctx) = 0;
};

// Envelope-level dispatch for one server: initialize, tools/list, tools/call.
// Unknown methods get JSON-RPC errors, never crashes; a throwing tool is
// reported as an isError result so a hostile server cannot take the session
// down from inside a handler.
class ServerRuntime {
 public:
  ServerRuntime(ToolServer& server, std::string server_name);

  // Consume one request line, append reply lines. `effects` is handed to the
  // tool as its interposed channel.
  void handle_line(const std::string& line, std::vector<std::string>& out, EffectChannel* effects);

  const std::string& server_name() const { return server_name_; }

 private:
  RpcEnvelope handle_envelope(const RpcEnvelope& request, EffectChannel* effects);

  ToolServer& server_;
  std::string server_name_;
};

class Connection;

// Client connection wired directly to an in-process runtime. The runtime must
// outlive the returned connection.
std::unique_ptr<Connection> connect_in_memory(ServerRuntime& runtime);

}  // namespace mcpshield::protocol
