#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcpshield::periodic {

using json = nlohmann::json;

struct HistoryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One completed invocation, compressed to what drift reasoning needs. The
// raw arguments never land here, only their digest.
struct InvocationRecord {
  std::uint64_t seq = 0;        // 1-based, strictly consecutive
  std::string tool_name;
  std::string args_digest;      // sha256 hex over the compact argument dump
  std::string output_summary;   // truncated at record time; empty if excluded
  bool output_error = false;
  std::map<std::string, int> event_kinds;    // kind name -> count
  std::set<std::string> domains_contacted;   // in-scope network targets
  std::string manifest_fingerprint;
  std::uint64_t timestamp_ms = 0;

  json to_json() const;
  static InvocationRecord from_json(const json& j);
};

struct History {
  std::string server_id;
  std::vector<InvocationRecord> records;
  std::uint64_t last_assessed_seq = 0;  // drift watermark, in-memory

  // Appends with integrity checking: the record's seq must be exactly
  // records.size()+1, otherwise HistoryError.
  void append(InvocationRecord record);
};

// JSONL persistence, one record per line in seq order. Loading an absent
// file yields an empty history; a malformed line or a seq gap raises
// HistoryError naming the line.
History load_history(const std::string& server_id,
                     const std::filesystem::path& file);
void append_history_line(const InvocationRecord& record,
                         const std::filesystem::path& file);

}  // namespace mcpshield::periodic
