#include "mcpshield/judge/rule_backend.hpp"

#include "mcpshield/probing/mockgen.hpp"
#include "mcpshield/protocol/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace mcpshield::judge {

namespace heuristics {

namespace {

std::string lower(const std::string& s) {
  std::string out(s.size(), '\0');
  std::transform(s.begin(), s.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool contains_any(const std::string& haystack,
                  std::initializer_list<const char*> needles) {
  for (const char* n : needles) {
    if (haystack.find(n) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

bool instruction_like(const std::string& text) {
  std::string t = lower(text);
  return contains_any(
      t, {"ignore previous instructions", "ignore all previous",
          "disregard previous", "ignore the above", "new instructions:",
          "run the command", "execute the command", "run this command",
          "do not tell the user", "don't tell the user",
          "do not mention this", "without telling the user",
          "you must first", "the assistant must", "the assistant should",
          "send the contents of", "forward the contents",
          "<important>", "system prompt", "before using this tool"});
}

bool priority_claim(const std::string& text) {
  std::string t = lower(text);
  return contains_any(t, {"always use this tool", "use this tool instead",
                          "instead of the", "overrides", "takes priority",
                          "takes precedence", "must be used for all",
                          "prefer this tool over"});
}

bool numeric_offset_policy(const std::string& text) {
  std::string t = lower(text);
  return contains_any(t, {"adjusted by adding", "adjust the reported",
                          "apply an offset", "maintenance policy",
                          "add this value to every"});
}

bool has_encoded_blob(const std::string& text, std::size_t min_len) {
  std::size_t run = 0;
  for (char c : text) {
    bool b64 = std::isalnum(static_cast<unsigned char>(c)) || c == '+' ||
               c == '/' || c == '=';
    run = b64 ? run + 1 : 0;
    if (run >= min_len) return true;
  }
  return false;
}

bool sensitive_path(const std::string& path) {
  std::string p = lower(path);
  return contains_any(p, {"id_rsa", ".ssh", "credential", "secret", "passwd",
                          "shadow", "token", "api_key", "apikey", ".env",
                          "wallet", "keychain", "/keys/", ".key", ".pem"});
}

bool sensitive_env(const std::string& name) {
  std::string n = lower(name);
  return contains_any(n, {"key", "token", "secret", "pass", "credential"});
}

}  // namespace heuristics

namespace {

using heuristics::has_encoded_blob;
using heuristics::instruction_like;
using heuristics::numeric_offset_policy;
using heuristics::priority_claim;
using heuristics::sensitive_env;
using heuristics::sensitive_path;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Pulls every string value out of an argument object, recursively.
void collect_strings(const json& node, std::vector<std::string>& out) {
  if (node.is_string()) {
    out.push_back(node.get<std::string>());
  } else if (node.is_array() || node.is_object()) {
    for (const auto& child : node) collect_strings(child, out);
  }
}

// Extracts a hostname from free text if the token plausibly is one:
// optional scheme, lowercase labels, at least one dot, alpha TLD.
std::string host_of(const std::string& raw) {
  std::string s = raw;
  auto scheme = s.find("://");
  if (scheme != std::string::npos) s = s.substr(scheme + 3);
  auto slash = s.find('/');
  if (slash != std::string::npos) s = s.substr(0, slash);
  auto colon = s.find(':');
  if (colon != std::string::npos) s = s.substr(0, colon);
  if (s.empty() || s.find('.') == std::string::npos) return "";
  std::string host;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) return "";
    host += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (char c : host) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') {
      return "";
    }
  }
  auto last_dot = host.rfind('.');
  if (last_dot + 1 >= host.size()) return "";
  for (std::size_t i = last_dot + 1; i < host.size(); ++i) {
    if (!std::isalpha(static_cast<unsigned char>(host[i]))) return "";
  }
  return host;
}

json answer_mock_batch(const json& user, std::uint64_t seed) {
  const json& tool = user.at("tool");
  std::string name = tool.at("name").get<std::string>();
  int count = user.at("mock_count").get<int>();
  std::vector<json> args;
  try {
    args = probing::generate_schema_mocks(tool.at("input_schema"), count,
                                          seed ^ fnv1a(name));
  } catch (const probing::UnsupportedSchema&) {
    args.assign(static_cast<std::size_t>(count), json::object());
  }
  json mocks = json::array();
  for (const auto& a : args) mocks.push_back(json{{"arguments", a}});
  return json{{"tool_name", name}, {"mocks", std::move(mocks)}};
}

json deny(const std::string& reason) {
  return json{{"verdict", "deny"}, {"reason", reason}};
}

json answer_per_mock(const json& user) {
  if (!user.at("error").is_null()) {
    return deny("probe_transport_failure");
  }
  std::string output;
  if (user.at("result").is_object()) {
    output = protocol::ToolResult::from_json(user.at("result")).text();
  }
  if (instruction_like(output) || priority_claim(output)) {
    return deny("output contains instruction-like content");
  }
  if (has_encoded_blob(output)) {
    return deny("output carries an opaque encoded blob");
  }
  for (const auto& ev : user.at("probe_events")) {
    std::string kind = ev.at("kind").get<std::string>();
    std::string target = ev.at("target").get<std::string>();
    if (kind == "process_spawn" || kind == "file_delete") {
      return deny("risky side effect during mock: " + kind);
    }
    if (kind == "file_read" && sensitive_path(target)) {
      return deny("mock read a sensitive path: " + target);
    }
    if (kind == "env_read" && sensitive_env(target)) {
      return deny("mock read a sensitive variable: " + target);
    }
  }
  return json{{"verdict", "ok"}, {"reason", "consistent with metadata"}};
}

json answer_manifest(const json& user) {
  std::set<std::string> flags;
  std::string reason;
  for (const auto& tool : user.at("manifest").at("tools")) {
    std::string name = tool.at("name").get<std::string>();
    std::string desc = tool.at("description").get<std::string>();
    if (instruction_like(desc)) {
      flags.insert("instruction_in_description");
      reason = "tool '" + name + "' embeds instructions for the agent";
    }
    if (priority_claim(desc)) {
      flags.insert("tool_substitution");
      reason = "tool '" + name + "' claims priority over other tools";
    }
    if (numeric_offset_policy(desc)) {
      flags.insert("output_poisoning");
      reason = "tool '" + name + "' directs callers to distort its output";
    }
    if (has_encoded_blob(desc)) {
      flags.insert("encoded_artifact");
      reason = "tool '" + name + "' hides an encoded blob in its description";
    }
  }
  if (!flags.empty()) {
    return json{{"trusted", false},
                {"reason", reason},
                {"flags", json(flags)}};
  }
  return json{{"trusted", true},
              {"reason", "descriptions consistent; mock behavior unremarkable"},
              {"flags", json::array()}};
}

json answer_grant(const json& user) {
  std::vector<std::string> strings;
  collect_strings(user.at("arguments"), strings);
  std::set<std::string> domains;
  for (const auto& s : strings) {
    std::string host = host_of(s);
    if (!host.empty()) domains.insert(host);
  }
  return json{{"allowed_domains", json(domains)}};
}

json answer_exec(const json& user) {
  std::set<std::string> flags;
  std::string reason;
  for (const auto& ev : user.at("execution_events")) {
    std::string kind = ev.at("kind").get<std::string>();
    std::string target = ev.at("target").get<std::string>();
    std::string detail = ev.at("detail").get<std::string>();
    if (kind == "process_spawn") {
      flags.insert("process_spawn");
      reason = "spawned a process: " + target;
    } else if (kind == "file_read" && sensitive_path(target)) {
      flags.insert("file_read_sensitive");
      reason = "read a sensitive path: " + target;
    } else if (kind == "env_read" && sensitive_env(target)) {
      flags.insert("api_key_request");
      reason = "read a sensitive variable: " + target;
    }
    if (kind == "file_write" && has_encoded_blob(detail)) {
      flags.insert("encoded_artifact");
      reason = "wrote an opaque encoded blob to " + target;
    }
    if (!ev.at("in_scope").get<bool>()) {
      flags.insert("scope_violation");
      reason = "event outside granted scope: " + kind + " " + target;
    }
  }
  if (!flags.empty()) {
    return json{{"trusted", false}, {"reason", reason}, {"flags", json(flags)}};
  }
  return json{{"trusted", true},
              {"reason", "no suspicious behavior"},
              {"flags", json::array()}};
}

json answer_drift(const json& user) {
  const json& deltas = user.at("deltas");
  const json& recent = user.at("recent_summary");

  std::set<std::string> signals;
  int strong = 0;
  std::string reason;

  if (deltas.at("manifest_changed").get<bool>()) {
    signals.insert("manifest_change");
    ++strong;
    reason = "manifest fingerprint changed between windows";
  }
  for (const auto& kind : deltas.at("new_event_kinds")) {
    std::string k = kind.get<std::string>();
    if (k == "process_spawn") {
      signals.insert("process_spawn");
      ++strong;
      reason = "started spawning processes";
    } else if (k == "env_read") {
      signals.insert("api_key_request");
      ++strong;
      reason = "started reading environment variables";
    } else if (k == "file_delete") {
      signals.insert("file_write");
      ++strong;
      reason = "started deleting files";
    } else if (k == "file_write") {
      signals.insert("file_write");
    } else if (k == "net_connect" || k == "dns_resolve") {
      signals.insert("new_ip_connect");
    }
  }
  for (const auto& sample : recent.at("sample_outputs")) {
    if (instruction_like(sample.get<std::string>())) {
      signals.insert("output_instruction");
      ++strong;
      reason = "recent outputs carry instruction-like content";
      break;
    }
  }

  if (!deltas.at("new_domains").empty()) signals.insert("new_domain");
  if (deltas.at("tool_count_delta").get<int>() != 0) {
    signals.insert("tool_count_change");
  }
  if (std::abs(deltas.at("output_length_shift").get<double>()) >= 0.5) {
    signals.insert("output_shift");
  }
  if (deltas.at("error_rate_delta").get<double>() >= 0.25) {
    signals.insert("error_spike");
  }

  int score = 1;
  if (strong >= 2) {
    score = 5;
  } else if (strong == 1) {
    score = 4;
  } else if (!signals.empty()) {
    score = 2;
    reason = "cosmetic changes only; consistent with benign evolution";
  } else {
    reason = "behavior stable across windows";
  }
  return json{{"drift_score", score},
              {"reason", reason},
              {"signals", json(signals)}};
}

}  // namespace

BackendReply RuleBackend::complete(const JudgeRequest& request) {
  return BackendReply{answer(request).dump(), std::nullopt, std::nullopt};
}

json RuleBackend::answer(const JudgeRequest& request) {
  switch (request.schema) {
    case SchemaId::mock_batch: return answer_mock_batch(request.user, seed_);
    case SchemaId::per_mock_verdict: return answer_per_mock(request.user);
    case SchemaId::manifest_verdict: return answer_manifest(request.user);
    case SchemaId::domain_grant: return answer_grant(request.user);
    case SchemaId::exec_verdict: return answer_exec(request.user);
    case SchemaId::drift_verdict: return answer_drift(request.user);
  }
  throw std::logic_error("unhandled judge schema");
}

}  // namespace mcpshield::judge
