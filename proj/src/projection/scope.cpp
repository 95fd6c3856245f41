#include "mcpshield/projection/scope.hpp"

#include <algorithm>
#include <cctype>

namespace mcpshield::projection {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Reduces a network target ("https://API.example.com:443/x", "example.com")
// to its bare lowercase host.
std::string bare_host(const std::string& raw) {
  std::string s = raw;
  auto scheme = s.find("://");
  if (scheme != std::string::npos) s = s.substr(scheme + 3);
  auto cut = s.find_first_of("/?#");
  if (cut != std::string::npos) s = s.substr(0, cut);
  auto colon = s.find(':');
  if (colon != std::string::npos) s = s.substr(0, colon);
  return lower(s);
}

bool is_under(const fs::path& prefix, const fs::path& p) {
  auto pref = prefix.begin();
  auto it = p.begin();
  for (; pref != prefix.end(); ++pref, ++it) {
    if (it == p.end() || *it != *pref) return false;
  }
  return true;
}

}  // namespace

json Scope::to_json() const {
  json paths = json::array();
  for (const auto& p : allowed_paths) paths.push_back(p.string());
  return json{
      {"allowed_domains", allowed_domains},
      {"allowed_paths", std::move(paths)},
      {"allow_process_spawn", allow_process_spawn},
      {"allow_env_read", allow_env_read},
      {"workspace_root", workspace_root.string()},
  };
}

Scope build_scope(const gateway::ShieldConfig& config,
                  const judge::DomainGrant& grant,
                  const std::filesystem::path& workspace_root) {
  Scope scope;
  scope.workspace_root = workspace_root;
  for (const auto& d : config.allowed_domains) {
    std::string host = bare_host(d);
    if (!host.empty()) scope.allowed_domains.push_back(host);
  }
  for (const auto& d : grant.allowed_domains) {
    std::string host = bare_host(d);
    if (!host.empty()) scope.allowed_domains.push_back(host);
  }
  std::sort(scope.allowed_domains.begin(), scope.allowed_domains.end());
  scope.allowed_domains.erase(
      std::unique(scope.allowed_domains.begin(), scope.allowed_domains.end()),
      scope.allowed_domains.end());
  for (const auto& p : config.allowed_paths) {
    std::error_code ec;
    fs::path resolved = fs::weakly_canonical(fs::path(p), ec);
    scope.allowed_paths.push_back(ec ? fs::path(p).lexically_normal()
                                     : resolved);
  }
  return scope;
}

bool domain_allowed(const std::string& host,
                    const std::vector<std::string>& allowed) {
  std::string h = lower(host);
  for (const auto& a : allowed) {
    if (h == a) return true;
    // Suffix match on a label boundary: api.example.com under example.com,
    // but evilexample.com is not.
    if (h.size() > a.size() + 1 && h.compare(h.size() - a.size(), a.size(), a) == 0 &&
        h[h.size() - a.size() - 1] == '.') {
      return true;
    }
  }
  return false;
}

std::filesystem::path resolve_target(const std::string& target,
                                     const fs::path& workspace_root) {
  fs::path p(target);
  if (p.is_relative()) {
    if (workspace_root.empty()) return p.lexically_normal();
    p = workspace_root / p;
  }
  std::error_code ec;
  fs::path resolved = fs::weakly_canonical(p, ec);
  return ec ? p.lexically_normal() : resolved;
}

CheckResult check_event(EventKind kind, const std::string& target,
                        const Scope& scope) {
  switch (kind) {
    case EventKind::net_connect:
    case EventKind::dns_resolve: {
      std::string host = bare_host(target);
      if (host.empty()) return {false, "malformed network target: " + target};
      if (domain_allowed(host, scope.allowed_domains)) return {true, ""};
      return {false, "domain not granted: " + host};
    }
    case EventKind::file_read:
    case EventKind::file_write:
    case EventKind::file_delete: {
      fs::path resolved = resolve_target(target, scope.workspace_root);
      if (resolved.is_relative()) {
        return {false, "relative path with no workspace: " + target};
      }
      if (!scope.workspace_root.empty() &&
          is_under(scope.workspace_root, resolved)) {
        return {true, ""};
      }
      for (const auto& prefix : scope.allowed_paths) {
        if (is_under(prefix, resolved)) return {true, ""};
      }
      return {false, "path outside scope: " + resolved.string()};
    }
    case EventKind::process_spawn:
      if (scope.allow_process_spawn) return {true, ""};
      return {false, "process execution not allowed"};
    case EventKind::env_read:
      if (scope.allow_env_read) return {true, ""};
      return {false, "environment access not allowed"};
  }
  return {false, "unknown event kind"};
}

}  // namespace mcpshield::projection
