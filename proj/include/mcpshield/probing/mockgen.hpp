#pragma once

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcpshield::probing {

using json = nlohmann::json;

struct UnsupportedSchema : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Placeholder strings for generated arguments. Deliberately synthetic so
// probes never carry anything resembling user data; tests assert every
// generated string comes from this pool (or a schema enum).
inline const std::vector<std::string> kMockStringPool = {
    "probe", "sample", "test-value", "alpha", "placeholder", "2024-01-01",
};

// Derives mock argument objects from a JSON Schema, deterministically in
// (schema, count, seed). Required properties always appear; optional ones
// alternate so the batch exercises both shapes. Throws UnsupportedSchema
// naming the construct when the schema uses something this generator
// cannot honor (oneOf, anyOf, allOf, $ref, non-object top level).
std::vector<json> generate_schema_mocks(const json& input_schema, int count,
                                        std::uint64_t seed);

}  // namespace mcpshield::probing
