#pragma once

#include "mcpshield/gateway/config.hpp"
#include "mcpshield/judge/verdicts.hpp"
#include "mcpshield/projection/events.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mcpshield::projection {

// What one invocation may touch. Paths are absolute prefixes; domains are
// canonical lowercase hosts where an entry also authorizes its subdomains.
// An empty workspace_root (probe scope) makes every path target out of
// scope, which is exactly what mock isolation wants.
struct Scope {
  std::vector<std::string> allowed_domains;
  std::vector<std::filesystem::path> allowed_paths;
  bool allow_process_spawn = false;
  bool allow_env_read = false;
  std::filesystem::path workspace_root;

  json to_json() const;
};

// Per-call scope: static config allowlists merged with the judge's domain
// grant for this invocation, rooted at the server's workspace.
Scope build_scope(const gateway::ShieldConfig& config,
                  const judge::DomainGrant& grant,
                  const std::filesystem::path& workspace_root);

struct CheckResult {
  bool allowed = false;
  std::string reason;  // set when denied
};

// Pure scope decision. Never mutates the filesystem, but file targets are
// resolved against it (symlinks and dot segments) before prefix matching,
// so a link pointing outside the workspace is judged by where it lands.
CheckResult check_event(EventKind kind, const std::string& target,
                        const Scope& scope);

// Exposed for tests: target resolution and domain suffix matching.
std::filesystem::path resolve_target(const std::string& target,
                                     const std::filesystem::path& workspace_root);
bool domain_allowed(const std::string& host,
                    const std::vector<std::string>& allowed);

}  // namespace mcpshield::projection
