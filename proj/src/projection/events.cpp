#include "mcpshield/projection/events.hpp"

#include <stdexcept>

namespace mcpshield::projection {

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::net_connect: return "net_connect";
    case EventKind::dns_resolve: return "dns_resolve";
    case EventKind::file_read: return "file_read";
    case EventKind::file_write: return "file_write";
    case EventKind::file_delete: return "file_delete";
    case EventKind::process_spawn: return "process_spawn";
    case EventKind::env_read: return "env_read";
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from_name(const std::string& name) {
  static const std::pair<const char*, EventKind> table[] = {
      {"net_connect", EventKind::net_connect},
      {"dns_resolve", EventKind::dns_resolve},
      {"file_read", EventKind::file_read},
      {"file_write", EventKind::file_write},
      {"file_delete", EventKind::file_delete},
      {"process_spawn", EventKind::process_spawn},
      {"env_read", EventKind::env_read},
  };
  for (const auto& [text, kind] : table) {
    if (name == text) return kind;
  }
  return std::nullopt;
}

json ExecutionEvent::to_json() const {
  return json{
      {"seq", seq},
      {"kind", event_kind_name(kind)},
      {"target", target},
      {"detail", detail},
      {"in_scope", in_scope},
  };
}

ExecutionEvent ExecutionEvent::from_json(const json& j) {
  ExecutionEvent ev;
  ev.seq = j.at("seq").get<std::uint64_t>();
  auto kind = event_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) {
    throw std::invalid_argument("unknown event kind: " +
                                j.at("kind").get<std::string>());
  }
  ev.kind = *kind;
  ev.target = j.at("target").get<std::string>();
  ev.detail = j.at("detail").get<std::string>();
  ev.in_scope = j.at("in_scope").get<bool>();
  return ev;
}

json ExecutionTrace::to_json() const {
  json evs = json::array();
  for (const auto& ev : events) evs.push_back(ev.to_json());
  json out{{"events", std::move(evs)}};
  if (hard_blocked) {
    out["hard_blocked"] = json{{"event_index", hard_blocked->event_index},
                               {"reason", hard_blocked->reason}};
  }
  if (error) out["error"] = *error;
  return out;
}

}  // namespace mcpshield::projection
