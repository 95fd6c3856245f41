#pragma once

#include "mcpshield/protocol/types.hpp"

#include <optional>
#include <string>

namespace mcpshield::protocol {

// Minimal schema check used on the client side before any wire traffic:
// required properties present, declared primitive types match. Undeclared
// extra arguments are tolerated (schemas are open objects).
// Returns an explanation on violation, nullopt when the arguments satisfy
// the schema.
std::optional<std::string> validate_arguments(const json& input_schema, const json& arguments);

}  // namespace mcpshield::protocol
