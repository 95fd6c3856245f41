#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace mcpshield::protocol {

using json = nlohmann::json;

// Key carried inside tools/call params._meta when the invocation is a probe.
// Cooperating servers may suppress real side effects when they see it; absence
// of the key means a real invocation.
inline constexpr const char* kMockFlagKey = "mcpshield_mock";

struct ToolMetadata {
  std::string name;
  std::string description;
  json input_schema = json::object();  // {"type":"object","properties":...,"required":[...]}

  json to_json() const;
  static ToolMetadata from_json(const json& j);
};

// Result of tools/list plus the caller-assigned server identity. server_id is
// a local handle, never part of the canonical bytes or fingerprint.
struct Manifest {
  std::string server_id;
  std::vector<ToolMetadata> tools;  // wire order preserved

  json to_json() const;  // includes server_id (for audit payloads, not hashing)
  static Manifest from_json(const json& j);
  const ToolMetadata* find_tool(const std::string& name) const;
};

struct ToolResult {
  std::vector<json> content;  // content blocks, typically {"type":"text","text":...}
  bool is_error = false;

  std::string text() const;  // concatenation of all text blocks
  json to_json() const;
  static ToolResult from_json(const json& j);
  static ToolResult make_text(std::string text, bool is_error = false);
};

// One JSON-RPC 2.0 frame. A request with a null id is a notification.
struct RpcEnvelope {
  enum class Kind { request, response, error };

  Kind kind = Kind::request;
  json id;              // null, integer, or string
  std::string method;   // requests/notifications only
  json payload;         // params, result, or the error object {code,message,data?}

  bool is_notification() const { return kind == Kind::request && id.is_null(); }

  static RpcEnvelope make_request(json id, std::string method, json params);
  static RpcEnvelope make_notification(std::string method, json params);
  static RpcEnvelope make_response(json id, json result);
  static RpcEnvelope make_error(json id, int code, std::string message, json data = json());
};

}  // namespace mcpshield::protocol
