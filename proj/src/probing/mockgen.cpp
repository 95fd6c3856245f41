#include "mcpshield/probing/mockgen.hpp"

#include <algorithm>

namespace mcpshield::probing {

namespace {

constexpr int kMaxDepth = 8;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void reject_unsupported(const json& schema, const std::string& where) {
  for (const char* key : {"oneOf", "anyOf", "allOf", "$ref", "not"}) {
    if (schema.contains(key)) {
      throw UnsupportedSchema("unsupported schema construct '" +
                              std::string(key) + "' at " + where);
    }
  }
}

json make_value(const json& schema, const std::string& where, int index,
                std::uint64_t mix, int depth) {
  if (depth > kMaxDepth) {
    throw UnsupportedSchema("schema nesting deeper than " +
                            std::to_string(kMaxDepth) + " at " + where);
  }
  if (!schema.is_object()) {
    throw UnsupportedSchema("schema at " + where + " is not an object");
  }
  reject_unsupported(schema, where);

  std::uint64_t h = mix ^ fnv1a(where);
  auto pick = [&](std::size_t n) {
    return static_cast<std::size_t>((static_cast<std::uint64_t>(index) + h) % n);
  };

  if (schema.contains("enum")) {
    const json& options = schema["enum"];
    if (!options.is_array() || options.empty()) {
      throw UnsupportedSchema("empty enum at " + where);
    }
    return options[pick(options.size())];
  }

  std::string type =
      schema.contains("type") && schema["type"].is_string()
          ? schema["type"].get<std::string>()
          : "string";  // untyped properties get harmless placeholder text

  if (type == "string") {
    return kMockStringPool[pick(kMockStringPool.size())];
  }
  if (type == "integer") {
    static const int ints[] = {0, 1, -1, 7};
    return ints[pick(4)];
  }
  if (type == "number") {
    static const double nums[] = {0.0, 1.5, -1.0, 42.5};
    return nums[pick(4)];
  }
  if (type == "boolean") {
    return pick(2) == 0;
  }
  if (type == "null") {
    return nullptr;
  }
  if (type == "array") {
    // Alternate empty and single-element so both shapes get exercised.
    if (pick(2) == 0 || !schema.contains("items")) return json::array();
    return json::array(
        {make_value(schema["items"], where + "[]", index, mix, depth + 1)});
  }
  if (type == "object") {
    json out = json::object();
    if (schema.contains("properties")) {
      for (const auto& [name, sub] : schema["properties"].items()) {
        out[name] =
            make_value(sub, where + "." + name, index, mix, depth + 1);
      }
    }
    return out;
  }
  throw UnsupportedSchema("unsupported type '" + type + "' at " + where);
}

}  // namespace

std::vector<json> generate_schema_mocks(const json& input_schema, int count,
                                        std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("mock count must be >= 0");
  if (!input_schema.is_object()) {
    throw UnsupportedSchema("input_schema is not an object");
  }
  if (input_schema.contains("type") &&
      !(input_schema["type"].is_string() &&
        input_schema["type"] == "object")) {
    throw UnsupportedSchema("top-level schema type must be 'object'");
  }
  reject_unsupported(input_schema, "top level");

  std::vector<std::string> required;
  if (input_schema.contains("required")) {
    for (const auto& r : input_schema["required"]) {
      required.push_back(r.get<std::string>());
    }
  }
  auto is_required = [&](const std::string& name) {
    return std::find(required.begin(), required.end(), name) != required.end();
  };

  std::vector<json> mocks;
  mocks.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    json args = json::object();
    if (input_schema.contains("properties")) {
      for (const auto& [name, sub] : input_schema["properties"].items()) {
        // Required properties always appear; optional ones alternate so the
        // batch covers both present and absent shapes.
        bool include =
            is_required(name) || ((i + fnv1a(name) + seed) % 2 == 0);
        if (!include) continue;
        args[name] = make_value(sub, name, i, seed, 1);
      }
    }
    mocks.push_back(std::move(args));
  }
  return mocks;
}

}  // namespace mcpshield::probing
