#include "mcpshield/periodic/history.hpp"

#include <fstream>

namespace mcpshield::periodic {

json InvocationRecord::to_json() const {
  return json{
      {"seq", seq},
      {"tool_name", tool_name},
      {"args_digest", args_digest},
      {"output_summary", output_summary},
      {"output_error", output_error},
      {"event_kinds", event_kinds},
      {"domains_contacted", domains_contacted},
      {"manifest_fingerprint", manifest_fingerprint},
      {"timestamp_ms", timestamp_ms},
  };
}

InvocationRecord InvocationRecord::from_json(const json& j) {
  InvocationRecord r;
  r.seq = j.at("seq").get<std::uint64_t>();
  r.tool_name = j.at("tool_name").get<std::string>();
  r.args_digest = j.at("args_digest").get<std::string>();
  r.output_summary = j.at("output_summary").get<std::string>();
  r.output_error = j.at("output_error").get<bool>();
  r.event_kinds = j.at("event_kinds").get<std::map<std::string, int>>();
  r.domains_contacted =
      j.at("domains_contacted").get<std::set<std::string>>();
  r.manifest_fingerprint = j.at("manifest_fingerprint").get<std::string>();
  r.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
  return r;
}

void History::append(InvocationRecord record) {
  std::uint64_t expected = records.size() + 1;
  if (record.seq != expected) {
    throw HistoryError("history for " + server_id + ": expected seq " +
                       std::to_string(expected) + ", got " +
                       std::to_string(record.seq));
  }
  records.push_back(std::move(record));
}

History load_history(const std::string& server_id,
                     const std::filesystem::path& file) {
  History h;
  h.server_id = server_id;
  std::ifstream in(file);
  if (!in) return h;  // nothing recorded yet

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw HistoryError(file.string() + ":" + std::to_string(lineno) +
                         ": not valid JSON");
    }
    try {
      h.append(InvocationRecord::from_json(parsed));
    } catch (const json::exception& e) {
      throw HistoryError(file.string() + ":" + std::to_string(lineno) + ": " +
                         e.what());
    }
  }
  return h;
}

void append_history_line(const InvocationRecord& record,
                         const std::filesystem::path& file) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::app);
  if (!out) {
    throw HistoryError("cannot open history file for append: " +
                       file.string());
  }
  out << record.to_json().dump() << '\n';
  out.flush();
  if (!out) {
    throw HistoryError("history append failed: " + file.string());
  }
}

}  // namespace mcpshield::periodic
