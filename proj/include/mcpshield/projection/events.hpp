#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcpshield::projection {

using json = nlohmann::json;

enum class EventKind {
  net_connect,
  dns_resolve,
  file_read,
  file_write,
  file_delete,
  process_spawn,
  env_read,
};

const char* event_kind_name(EventKind kind);
std::optional<EventKind> event_kind_from_name(const std::string& name);

struct ExecutionEvent {
  std::uint64_t seq = 0;       // strictly increasing within a trace
  EventKind kind = EventKind::net_connect;
  std::string target;          // hostname, path, command, or variable name
  std::string detail;
  bool in_scope = false;       // check_event verdict at capture time

  json to_json() const;
  static ExecutionEvent from_json(const json& j);
};

struct HardBlock {
  std::size_t event_index = 0;
  std::string reason;
};

// Ordered side-effect record of one invocation. hard_blocked set means the
// invocation was aborted at that event and nothing after it exists.
struct ExecutionTrace {
  std::vector<ExecutionEvent> events;
  std::optional<HardBlock> hard_blocked;
  std::optional<std::string> error;  // timeout / transport detail, if any

  bool blocked() const { return hard_blocked.has_value(); }
  json to_json() const;
};

}  // namespace mcpshield::projection
