#include "mcpshield/judge/decode.hpp"

#include <algorithm>
#include <set>

namespace mcpshield::judge {

namespace {

// Strip one surrounding markdown fence (``` or ```json) if present. This is
// the single tolerated deviation from "Return ONLY JSON".
std::string strip_fence(const std::string& raw) {
  auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return raw;
  auto last = raw.find_last_not_of(" \t\r\n");
  std::string body = raw.substr(first, last - first + 1);

  if (body.rfind("```", 0) != 0) return body;
  auto open_end = body.find('\n');
  if (open_end == std::string::npos) return body;
  auto close = body.rfind("```");
  if (close == 0 || close < open_end) return body;
  std::string inner = body.substr(open_end + 1, close - open_end - 1);
  auto inner_last = inner.find_last_not_of(" \t\r\n");
  return inner_last == std::string::npos ? std::string{} : inner.substr(0, inner_last + 1);
}

struct Fail {
  DecodeError err;
};

DecodeResult failure(DecodeErrorKind kind, std::string message) {
  return DecodeResult{std::nullopt, DecodeError{kind, std::move(message)}};
}

// Keys must match the schema exactly in both directions.
std::optional<DecodeError> check_keys(const json& obj, const std::set<std::string>& expected) {
  for (const auto& item : obj.items()) {
    if (!expected.count(item.key())) {
      return DecodeError{DecodeErrorKind::unknown_key, "unknown key: " + item.key()};
    }
  }
  for (const auto& key : expected) {
    if (!obj.contains(key)) {
      return DecodeError{DecodeErrorKind::missing_key, "missing key: " + key};
    }
  }
  return std::nullopt;
}

std::optional<DecodeError> want_string(const json& obj, const char* key) {
  if (!obj[key].is_string()) {
    return DecodeError{DecodeErrorKind::type_mismatch, std::string(key) + " must be a string"};
  }
  return std::nullopt;
}

std::optional<DecodeError> want_bool(const json& obj, const char* key) {
  if (!obj[key].is_boolean()) {
    return DecodeError{DecodeErrorKind::type_mismatch, std::string(key) + " must be a boolean"};
  }
  return std::nullopt;
}

std::optional<DecodeError> read_string_list(const json& value, const char* key,
                                            std::vector<std::string>& out) {
  if (!value.is_array()) {
    return DecodeError{DecodeErrorKind::type_mismatch, std::string(key) + " must be a list"};
  }
  for (const auto& item : value) {
    if (!item.is_string()) {
      return DecodeError{DecodeErrorKind::type_mismatch,
                         std::string(key) + " entries must be strings"};
    }
    out.push_back(item.get<std::string>());
  }
  return std::nullopt;
}

// Hostname canonicalization for grants: lowercase, drop scheme/path/port,
// deduplicate. Shape violations were already rejected; this is construction
// of the domain set, not decode leniency.
std::string canonical_host(std::string entry) {
  auto scheme = entry.find("://");
  if (scheme != std::string::npos) entry.erase(0, scheme + 3);
  auto slash = entry.find('/');
  if (slash != std::string::npos) entry.erase(slash);
  auto colon = entry.find(':');
  if (colon != std::string::npos) entry.erase(colon);
  std::transform(entry.begin(), entry.end(), entry.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return entry;
}

}  // namespace

bool is_whitelisted_signal(const std::string& signal) {
  return std::any_of(kSignalWhitelist.begin(), kSignalWhitelist.end(),
                     [&](const char* s) { return signal == s; });
}

const char* decode_error_kind_name(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::parse_failure: return "parse_failure";
    case DecodeErrorKind::missing_key: return "missing_key";
    case DecodeErrorKind::unknown_key: return "unknown_key";
    case DecodeErrorKind::type_mismatch: return "type_mismatch";
    case DecodeErrorKind::out_of_range: return "out_of_range";
    case DecodeErrorKind::unknown_signal: return "unknown_signal";
  }
  return "unknown";
}

DecodeResult decode_strict(const std::string& raw, SchemaId expected) {
  const std::string body = strip_fence(raw);
  json j = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return failure(DecodeErrorKind::parse_failure, "not valid JSON");
  if (!j.is_object()) return failure(DecodeErrorKind::parse_failure, "not a single JSON object");

  switch (expected) {
    case SchemaId::mock_batch: {
      if (auto e = check_keys(j, {"tool_name", "mocks"})) return {std::nullopt, e};
      if (auto e = want_string(j, "tool_name")) return {std::nullopt, e};
      if (!j["mocks"].is_array()) {
        return failure(DecodeErrorKind::type_mismatch, "mocks must be a list");
      }
      MockBatch batch;
      batch.tool_name = j["tool_name"].get<std::string>();
      for (const auto& mock : j["mocks"]) {
        if (!mock.is_object()) {
          return failure(DecodeErrorKind::type_mismatch, "each mock must be an object");
        }
        if (auto e = check_keys(mock, {"arguments"})) return {std::nullopt, e};
        if (!mock["arguments"].is_object()) {
          return failure(DecodeErrorKind::type_mismatch, "arguments must be an object");
        }
        batch.mocks.push_back(mock["arguments"]);
      }
      return DecodeResult{VerdictValue{std::move(batch)}, std::nullopt};
    }

    case SchemaId::per_mock_verdict: {
      if (auto e = check_keys(j, {"verdict", "reason"})) return {std::nullopt, e};
      if (auto e = want_string(j, "verdict")) return {std::nullopt, e};
      if (auto e = want_string(j, "reason")) return {std::nullopt, e};
      const auto token = j["verdict"].get<std::string>();
      PerMockVerdict v;
      if (token == "deny") {
        v.verdict = PerMockVerdict::Verdict::deny;
      } else if (token == "ok") {
        v.verdict = PerMockVerdict::Verdict::ok;
      } else {
        return failure(DecodeErrorKind::type_mismatch, "verdict must be deny or ok");
      }
      v.reason = j["reason"].get<std::string>();
      return DecodeResult{VerdictValue{std::move(v)}, std::nullopt};
    }

    case SchemaId::manifest_verdict:
    case SchemaId::exec_verdict: {
      if (auto e = check_keys(j, {"trusted", "reason", "flags"})) return {std::nullopt, e};
      if (auto e = want_bool(j, "trusted")) return {std::nullopt, e};
      if (auto e = want_string(j, "reason")) return {std::nullopt, e};
      std::vector<std::string> flags;
      if (auto e = read_string_list(j["flags"], "flags", flags)) return {std::nullopt, e};
      if (expected == SchemaId::manifest_verdict) {
        ManifestVerdict v{j["trusted"].get<bool>(), j["reason"].get<std::string>(), std::move(flags)};
        return DecodeResult{VerdictValue{std::move(v)}, std::nullopt};
      }
      ExecVerdict v{j["trusted"].get<bool>(), j["reason"].get<std::string>(), std::move(flags)};
      return DecodeResult{VerdictValue{std::move(v)}, std::nullopt};
    }

    case SchemaId::domain_grant: {
      if (auto e = check_keys(j, {"allowed_domains"})) return {std::nullopt, e};
      std::vector<std::string> raw_domains;
      if (auto e = read_string_list(j["allowed_domains"], "allowed_domains", raw_domains)) {
        return {std::nullopt, e};
      }
      DomainGrant grant;
      for (auto& d : raw_domains) {
        auto host = canonical_host(std::move(d));
        if (host.empty()) continue;
        if (std::find(grant.allowed_domains.begin(), grant.allowed_domains.end(), host) ==
            grant.allowed_domains.end()) {
          grant.allowed_domains.push_back(std::move(host));
        }
      }
      return DecodeResult{VerdictValue{std::move(grant)}, std::nullopt};
    }

    case SchemaId::drift_verdict: {
      if (auto e = check_keys(j, {"drift_score", "reason", "signals"})) return {std::nullopt, e};
      if (!j["drift_score"].is_number_integer()) {
        return failure(DecodeErrorKind::type_mismatch, "drift_score must be an integer");
      }
      if (auto e = want_string(j, "reason")) return {std::nullopt, e};
      const auto score = j["drift_score"].get<std::int64_t>();
      if (score < 1 || score > 5) {
        return failure(DecodeErrorKind::out_of_range,
                       "drift_score out of range: " + std::to_string(score));
      }
      std::vector<std::string> signals;
      if (auto e = read_string_list(j["signals"], "signals", signals)) return {std::nullopt, e};
      for (const auto& s : signals) {
        if (!is_whitelisted_signal(s)) {
          return failure(DecodeErrorKind::unknown_signal, "signal not in vocabulary: " + s);
        }
      }
      DriftVerdict v{static_cast<int>(score), j["reason"].get<std::string>(), std::move(signals)};
      return DecodeResult{VerdictValue{std::move(v)}, std::nullopt};
    }
  }
  return failure(DecodeErrorKind::parse_failure, "unhandled schema");
}

namespace {

template <typename T>
Decoded<T> narrow(DecodeResult result) {
  if (!result.ok()) return Decoded<T>{std::nullopt, result.error};
  return Decoded<T>{std::get<T>(std::move(*result.value)), std::nullopt};
}

}  // namespace

Decoded<MockBatch> decode_mock_batch(const std::string& raw) {
  return narrow<MockBatch>(decode_strict(raw, SchemaId::mock_batch));
}
Decoded<PerMockVerdict> decode_per_mock(const std::string& raw) {
  return narrow<PerMockVerdict>(decode_strict(raw, SchemaId::per_mock_verdict));
}
Decoded<ManifestVerdict> decode_manifest_verdict(const std::string& raw) {
  return narrow<ManifestVerdict>(decode_strict(raw, SchemaId::manifest_verdict));
}
Decoded<DomainGrant> decode_domain_grant(const std::string& raw) {
  return narrow<DomainGrant>(decode_strict(raw, SchemaId::domain_grant));
}
Decoded<ExecVerdict> decode_exec_verdict(const std::string& raw) {
  return narrow<ExecVerdict>(decode_strict(raw, SchemaId::exec_verdict));
}
Decoded<DriftVerdict> decode_drift_verdict(const std::string& raw) {
  return narrow<DriftVerdict>(decode_strict(raw, SchemaId::drift_verdict));
}

}  // namespace mcpshield::judge
