#include "mcpshield/protocol/schema.hpp"

namespace mcpshield::protocol {

namespace {

bool type_matches(const std::string& declared, const json& value) {
  if (declared == "string") return value.is_string();
  if (declared == "integer") return value.is_number_integer();
  if (declared == "number") return value.is_number();
  if (declared == "boolean") return value.is_boolean();
  if (declared == "array") return value.is_array();
  if (declared == "object") return value.is_object();
  if (declared == "null") return value.is_null();
  return true;  // unknown declared type: do not reject what we cannot check
}

}  // namespace

std::optional<std::string> validate_arguments(const json& input_schema, const json& arguments) {
  if (!arguments.is_object()) return "arguments must be an object";
  if (!input_schema.is_object()) return std::nullopt;

  if (input_schema.contains("required") && input_schema["required"].is_array()) {
    for (const auto& req : input_schema["required"]) {
      if (!req.is_string()) continue;
      const auto name = req.get<std::string>();
      if (!arguments.contains(name)) return "missing required argument: " + name;
    }
  }

  if (input_schema.contains("properties") && input_schema["properties"].is_object()) {
    for (const auto& [name, prop] : input_schema["properties"].items()) {
      if (!arguments.contains(name)) continue;
      if (!prop.is_object() || !prop.contains("type") || !prop["type"].is_string()) continue;
      const auto declared = prop["type"].get<std::string>();
      if (!type_matches(declared, arguments[name])) {
        return "argument " + name + " does not match declared type " + declared;
      }
    }
  }
  return std::nullopt;
}

}  // namespace mcpshield::protocol
