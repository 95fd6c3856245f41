#pragma once

#include "mcpshield/judge/verdicts.hpp"

#include <optional>
#include <string>
#include <variant>

namespace mcpshield::judge {

enum class SchemaId {
  mock_batch,
  per_mock_verdict,
  manifest_verdict,
  domain_grant,
  exec_verdict,
  drift_verdict,
};

enum class DecodeErrorKind {
  parse_failure,    // not JSON, or not a single object
  missing_key,
  unknown_key,
  type_mismatch,    // includes enum tokens outside their value set
  out_of_range,     // drift_score outside [1,5]
  unknown_signal,   // signal outside the 11-entry whitelist
};

struct DecodeError {
  DecodeErrorKind kind = DecodeErrorKind::parse_failure;
  std::string message;
};

const char* decode_error_kind_name(DecodeErrorKind kind);

using VerdictValue =
    std::variant<MockBatch, PerMockVerdict, ManifestVerdict, DomainGrant, ExecVerdict, DriftVerdict>;

// Either a fully typed verdict or a typed error; nothing in between.
struct DecodeResult {
  std::optional<VerdictValue> value;
  std::optional<DecodeError> error;
  bool ok() const { return value.has_value(); }
};

// Strict structured-output decoding: the raw string must be a single JSON
// object whose keys exactly match the expected schema (unknown keys rejected,
// all keys required). Stripping one markdown code fence is the only leniency.
DecodeResult decode_strict(const std::string& raw, SchemaId expected);

// Typed conveniences over decode_strict.
template <typename T>
struct Decoded {
  std::optional<T> value;
  std::optional<DecodeError> error;
  bool ok() const { return value.has_value(); }
};

Decoded<MockBatch> decode_mock_batch(const std::string& raw);
Decoded<PerMockVerdict> decode_per_mock(const std::string& raw);
Decoded<ManifestVerdict> decode_manifest_verdict(const std::string& raw);
Decoded<DomainGrant> decode_domain_grant(const std::string& raw);
Decoded<ExecVerdict> decode_exec_verdict(const std::string& raw);
Decoded<DriftVerdict> decode_drift_verdict(const std::string& raw);

}  // namespace mcpshield::judge
