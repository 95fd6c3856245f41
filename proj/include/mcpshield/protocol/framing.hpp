#pragma once

#include "mcpshield/protocol/types.hpp"

#include <cstddef>
#include <string>

namespace mcpshield::protocol {

// Frames are newline-delimited UTF-8 JSON-RPC objects. A single frame larger
// than this is treated as a framing fault, not a request.
inline constexpr std::size_t kMaxFrameBytes = 4u * 1024u * 1024u;

// Serialize one envelope to a single line including the trailing '\n'.
std::string frame_write(const RpcEnvelope& envelope);

// Parse one line (with or without trailing newline) into an envelope.
// Throws FramingError on malformed JSON, non-2.0 frames, bad id types,
// ambiguous request/response shapes, or oversized input.
RpcEnvelope frame_read(const std::string& line);

}  // namespace mcpshield::protocol
