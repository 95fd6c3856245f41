#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcpshield::gateway {

using json = nlohmann::json;

struct AuditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AuditStage { denylist, pre, exec, post, proxy };

const char* audit_stage_name(AuditStage stage);

struct AuditRecord {
  std::uint64_t timestamp_ms = 0;  // filled at append time when zero
  std::string server_id;
  AuditStage stage = AuditStage::proxy;
  std::string kind;  // stage1_decision, manifest_change, call, usage, ...
  json payload;
  std::optional<std::string> decision;

  json to_json() const;
};

// Append-only JSONL sink. Every record is written and flushed before append
// returns; a storage failure throws AuditError because continuing unaudited
// is worse than stopping. Timestamps are monotone per server even if the
// wall clock stalls within a millisecond.
class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path file);

  void append(AuditRecord record);

  // Session-local mirror of what was written, for reports and tests.
  const std::vector<AuditRecord>& records() const { return records_; }
  const std::filesystem::path& path() const { return file_; }

 private:
  std::filesystem::path file_;
  std::ofstream out_;
  std::vector<AuditRecord> records_;
  std::map<std::string, std::uint64_t> last_ts_;
};

}  // namespace mcpshield::gateway
