#include "mcpshield/gateway/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mcpshield::gateway {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected boolean, got '" + v + "'");
}

int parse_int(const std::string& v, const std::string& key) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected number, got '" + v + "'");
  }
}

std::vector<std::string> parse_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void ShieldConfig::apply_kv(const std::string& key, const std::string& value) {
  if (key == "pre_enabled") pre_enabled = parse_bool(value, key);
  else if (key == "pre_mock_count") pre_mock_count = parse_int(value, key);
  else if (key == "pre_tool_limit") pre_tool_limit = parse_int(value, key);
  else if (key == "pre_result_max_chars") pre_result_max_chars = parse_int(value, key);
  else if (key == "pre_deny_ratio") pre_deny_ratio = parse_double(value, key);
  else if (key == "exec_enabled") exec_enabled = parse_bool(value, key);
  else if (key == "exec_trace_whitelisted") exec_trace_whitelisted = parse_bool(value, key);
  else if (key == "post_enabled") post_enabled = parse_bool(value, key);
  else if (key == "post_k") post_k = parse_int(value, key);
  else if (key == "post_baseline") post_baseline = parse_int(value, key);
  else if (key == "post_threshold") post_threshold = parse_int(value, key);
  else if (key == "post_output_max_chars") post_output_max_chars = parse_int(value, key);
  else if (key == "post_include_output") post_include_output = parse_bool(value, key);
  else if (key == "allowed_domains") allowed_domains = parse_list(value);
  else if (key == "allowed_paths") allowed_paths = parse_list(value);
  else if (key == "persist_workspace") persist_workspace = parse_bool(value, key);
  else if (key == "link_inputs") link_inputs = parse_bool(value, key);
  else if (key == "input_paths") input_paths = parse_list(value);
  else if (key == "trace_mode") trace_mode = value;
  else if (key == "tool_timeout_seconds") tool_timeout_seconds = parse_int(value, key);
  else if (key == "judge_backend") judge_backend = value;
  else if (key == "judge_seed") judge_seed = static_cast<std::uint64_t>(parse_int(value, key));
  else if (key == "judge_endpoint") judge_endpoint = value;
  else if (key == "judge_model") judge_model = value;
  else if (key == "judge_api_key") judge_api_key = value;
  else throw ConfigError("unknown config key: " + key);
}

void ShieldConfig::validate() const {
  if (pre_mock_count < 1) throw ConfigError("pre_mock_count must be >= 1");
  if (pre_tool_limit < 0) throw ConfigError("pre_tool_limit must be >= 0");
  if (pre_result_max_chars < 0) throw ConfigError("pre_result_max_chars must be >= 0");
  if (pre_deny_ratio < 0.0 || pre_deny_ratio > 1.0) {
    throw ConfigError("pre_deny_ratio must be in [0, 1]");
  }
  if (post_k < 1) throw ConfigError("post_k must be >= 1");
  if (post_baseline < 1) throw ConfigError("post_baseline must be >= 1");
  if (post_threshold < 1 || post_threshold > 5) {
    throw ConfigError("post_threshold must be in [1, 5]");
  }
  if (post_output_max_chars < 0) throw ConfigError("post_output_max_chars must be >= 0");
  if (trace_mode != "interposed" && trace_mode != "declared") {
    throw ConfigError("trace_mode must be 'interposed' or 'declared'");
  }
  if (tool_timeout_seconds < 1) throw ConfigError("tool_timeout_seconds must be >= 1");
  if (judge_backend != "rule" && judge_backend != "remote") {
    throw ConfigError("judge_backend must be 'rule' or 'remote'");
  }
  if (judge_backend == "remote" && judge_endpoint.empty()) {
    throw ConfigError("judge_backend=remote requires judge_endpoint");
  }
}

json ShieldConfig::to_json() const {
  return json{
      {"pre_enabled", pre_enabled},
      {"pre_mock_count", pre_mock_count},
      {"pre_tool_limit", pre_tool_limit},
      {"pre_result_max_chars", pre_result_max_chars},
      {"pre_deny_ratio", pre_deny_ratio},
      {"exec_enabled", exec_enabled},
      {"exec_trace_whitelisted", exec_trace_whitelisted},
      {"post_enabled", post_enabled},
      {"post_k", post_k},
      {"post_baseline", post_baseline},
      {"post_threshold", post_threshold},
      {"post_output_max_chars", post_output_max_chars},
      {"post_include_output", post_include_output},
      {"allowed_domains", allowed_domains},
      {"allowed_paths", allowed_paths},
      {"persist_workspace", persist_workspace},
      {"link_inputs", link_inputs},
      {"input_paths", input_paths},
      {"trace_mode", trace_mode},
      {"tool_timeout_seconds", tool_timeout_seconds},
      {"judge_backend", judge_backend},
      {"judge_seed", judge_seed},
      // endpoint/model are operational detail; the key is secret and is
      // never serialized anywhere.
      {"judge_endpoint", judge_endpoint},
      {"judge_model", judge_model},
  };
}

ShieldConfig ShieldConfig::monitoring_profile() {
  ShieldConfig cfg;
  cfg.pre_mock_count = 2;
  cfg.exec_trace_whitelisted = true;
  cfg.allowed_domains = {"weatherapi.com", "themoviedb.org", "yahoo.com",
                         "example.invalid"};
  return cfg;
}

ShieldConfig ShieldConfig::passthrough_profile() {
  ShieldConfig cfg;
  cfg.pre_enabled = false;
  cfg.exec_enabled = false;
  cfg.post_enabled = false;
  return cfg;
}

ShieldConfig parse_config_text(const std::string& text) {
  ShieldConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key=value, got '" + stripped + "'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    try {
      cfg.apply_kv(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ShieldConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace mcpshield::gateway
