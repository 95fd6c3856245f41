#include "mcpshield/protocol/framing.hpp"

#include "mcpshield/protocol/errors.hpp"

namespace mcpshield::protocol {

std::string frame_write(const RpcEnvelope& envelope) {
  json j{{"jsonrpc", "2.0"}};
  switch (envelope.kind) {
    case RpcEnvelope::Kind::request:
      if (!envelope.id.is_null()) j["id"] = envelope.id;
      j["method"] = envelope.method;
      if (!envelope.payload.is_null()) j["params"] = envelope.payload;
      break;
    case RpcEnvelope::Kind::response:
      j["id"] = envelope.id;
      j["result"] = envelope.payload;
      break;
    case RpcEnvelope::Kind::error:
      j["id"] = envelope.id;
      j["error"] = envelope.payload;
      break;
  }
  std::string line = j.dump();
  if (line.size() + 1 > kMaxFrameBytes) throw FramingError("frame exceeds size cap");
  line.push_back('\n');
  return line;
}

RpcEnvelope frame_read(const std::string& line) {
  if (line.size() > kMaxFrameBytes) throw FramingError("frame exceeds size cap");

  std::string_view body{line};
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);

  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw FramingError("frame is not a JSON object");
  if (j.value("jsonrpc", "") != "2.0") throw FramingError("missing jsonrpc 2.0 marker");

  json id;
  if (j.contains("id")) {
    id = j["id"];
    if (!id.is_null() && !id.is_number_integer() && !id.is_string()) {
      throw FramingError("id must be null, integer, or string");
    }
  }

  const bool has_method = j.contains("method");
  const bool has_result = j.contains("result");
  const bool has_error = j.contains("error");
  if (static_cast<int>(has_method) + static_cast<int>(has_result) + static_cast<int>(has_error) !=
      1) {
    throw FramingError("frame must carry exactly one of method/result/error");
  }

  RpcEnvelope e;
  e.id = id;
  if (has_method) {
    if (!j["method"].is_string()) throw FramingError("method must be a string");
    e.kind = RpcEnvelope::Kind::request;
    e.method = j["method"].get<std::string>();
    e.payload = j.value("params", json());
  } else if (has_result) {
    if (id.is_null()) throw FramingError("response frames require an id");
    e.kind = RpcEnvelope::Kind::response;
    e.payload = j["result"];
  } else {
    const json& err = j["error"];
    if (!err.is_object() || !err.contains("code") || !err["code"].is_number_integer() ||
        !err.contains("message") || !err["message"].is_string()) {
      throw FramingError("error frames require {code:int, message:string}");
    }
    e.kind = RpcEnvelope::Kind::error;
    e.payload = err;
  }
  return e;
}

}  // namespace mcpshield::protocol
