#include "mcpshield/gateway/audit.hpp"

#include <chrono>

namespace mcpshield::gateway {

const char* audit_stage_name(AuditStage stage) {
  switch (stage) {
    case AuditStage::denylist: return "denylist";
    case AuditStage::pre: return "pre";
    case AuditStage::exec: return "exec";
    case AuditStage::post: return "post";
    case AuditStage::proxy: return "proxy";
  }
  return "unknown";
}

json AuditRecord::to_json() const {
  json out{
      {"timestamp_ms", timestamp_ms},
      {"server_id", server_id},
      {"stage", audit_stage_name(stage)},
      {"kind", kind},
      {"payload", payload},
  };
  if (decision) out["decision"] = *decision;
  return out;
}

AuditLog::AuditLog(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.has_parent_path()) {
    std::filesystem::create_directories(file_.parent_path());
  }
  out_.open(file_, std::ios::app);
  if (!out_) throw AuditError("cannot open audit log: " + file_.string());
}

void AuditLog::append(AuditRecord record) {
  if (record.timestamp_ms == 0) {
    record.timestamp_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
  }
  auto& last = last_ts_[record.server_id];
  if (record.timestamp_ms < last) record.timestamp_ms = last;
  last = record.timestamp_ms;

  out_ << record.to_json().dump() << '\n';
  out_.flush();
  if (!out_) {
    throw AuditError("audit append failed: " + file_.string());
  }
  records_.push_back(std::move(record));
}

}  // namespace mcpshield::gateway
