#pragma once

#include "mcpshield/projection/events.hpp"
#include "mcpshield/protocol/types.hpp"

#include <optional>
#include <string>

namespace mcpshield::probing {

using json = nlohmann::json;

// Everything observed while running one mock invocation: the metadata the
// mock was generated from, the arguments sent, whatever came back, and the
// side effects the tool attempted while sandboxed. error is set when the
// probe itself failed (transport drop, timeout); output is absent then.
struct ProbeArtifact {
  protocol::ToolMetadata metadata;
  json mock_args = json::object();
  std::optional<protocol::ToolResult> output;
  projection::ExecutionTrace probe_events;
  std::optional<std::string> error;

  json to_json() const;
};

}  // namespace mcpshield::probing
