#include "mcpshield/protocol/types.hpp"

#include "mcpshield/protocol/errors.hpp"

namespace mcpshield::protocol {

namespace {

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ProtocolError(std::string("missing or non-string field: ") + key);
  }
  return j[key].get<std::string>();
}

}  // namespace

json ToolMetadata::to_json() const {
  return json{{"name", name}, {"description", description}, {"input_schema", input_schema}};
}

ToolMetadata ToolMetadata::from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("tool metadata must be an object");
  ToolMetadata t;
  t.name = require_string(j, "name");
  t.description = j.value("description", std::string{});
  if (j.contains("input_schema")) {
    t.input_schema = j["input_schema"];
  } else if (j.contains("inputSchema")) {
    t.input_schema = j["inputSchema"];  // camelCase form used by common servers
  } else {
    t.input_schema = json::object();
  }
  if (!t.input_schema.is_object()) throw ProtocolError("input_schema must be an object");
  return t;
}

json Manifest::to_json() const {
  json tools_json = json::array();
  for (const auto& t : tools) tools_json.push_back(t.to_json());
  return json{{"server_id", server_id}, {"tools", tools_json}};
}

Manifest Manifest::from_json(const json& j) {
  if (!j.is_object() || !j.contains("tools") || !j["tools"].is_array()) {
    throw ProtocolError("manifest must carry a tools array");
  }
  Manifest m;
  m.server_id = j.value("server_id", std::string{});
  for (const auto& t : j["tools"]) m.tools.push_back(ToolMetadata::from_json(t));
  return m;
}

const ToolMetadata* Manifest::find_tool(const std::string& name) const {
  for (const auto& t : tools) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::string ToolResult::text() const {
  std::string out;
  for (const auto& block : content) {
    if (block.is_object() && block.value("type", "") == "text" && block.contains("text") &&
        block["text"].is_string()) {
      out += block["text"].get<std::string>();
    }
  }
  return out;
}

json ToolResult::to_json() const {
  return json{{"content", content}, {"isError", is_error}};
}

ToolResult ToolResult::from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("tool result must be an object");
  ToolResult r;
  if (j.contains("content")) {
    if (!j["content"].is_array()) throw ProtocolError("result content must be an array");
    for (const auto& block : j["content"]) r.content.push_back(block);
  }
  r.is_error = j.value("isError", false);
  return r;
}

ToolResult ToolResult::make_text(std::string text, bool is_error) {
  ToolResult r;
  r.content.push_back(json{{"type", "text"}, {"text", std::move(text)}});
  r.is_error = is_error;
  return r;
}

RpcEnvelope RpcEnvelope::make_request(json id, std::string method, json params) {
  RpcEnvelope e;
  e.kind = Kind::request;
  e.id = std::move(id);
  e.method = std::move(method);
  e.payload = std::move(params);
  return e;
}

RpcEnvelope RpcEnvelope::make_notification(std::string method, json params) {
  return make_request(json(), std::move(method), std::move(params));
}

RpcEnvelope RpcEnvelope::make_response(json id, json result) {
  RpcEnvelope e;
  e.kind = Kind::response;
  e.id = std::move(id);
  e.payload = std::move(result);
  return e;
}

RpcEnvelope RpcEnvelope::make_error(json id, int code, std::string message, json data) {
  RpcEnvelope e;
  e.kind = Kind::error;
  e.id = std::move(id);
  e.payload = json{{"code", code}, {"message", std::move(message)}};
  if (!data.is_null()) e.payload["data"] = std::move(data);
  return e;
}

}  // namespace mcpshield::protocol
