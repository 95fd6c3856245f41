#pragma once

#include "mcpshield/protocol/types.hpp"

#include <string>
#include <string_view>

namespace mcpshield::protocol {

// Lowercase hex SHA-256. sha256_hex("") is the well-known
// e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855.
std::string sha256_hex(std::string_view bytes);

// Deterministic byte form of a manifest: tools sorted by name, object keys
// sorted lexicographically at every level, compact UTF-8, server_id excluded.
// Two manifests canonicalize identically iff they describe the same tool set.
std::string canonicalize_manifest(const Manifest& manifest);

// SHA-256 over the canonical bytes; this is the identity used by the deny
// list, the drift history, and signature exchange.
std::string fingerprint(const Manifest& manifest);

}  // namespace mcpshield::protocol
