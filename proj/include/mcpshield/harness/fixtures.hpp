#pragma once

#include "mcpshield/protocol/connection.hpp"
#include "mcpshield/protocol/server.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mcpshield::harness {

using json = nlohmann::json;

// Attack families the fixture corpus covers. `benign` fixtures are honest
// twins of the malicious surfaces so false-positive rates are measured on
// comparable traffic, not on trivially clean servers.
enum class Family {
  tool_poisoning,
  tool_substitution,
  encoded_payload,
  output_poisoning,
  monitor_hijack,
  rug_pull,
  benign,
};

const char* family_name(Family family);
std::optional<Family> family_from_name(const std::string& name);

// One reproducible fixture instance. The seed feeds every source of variation
// inside a fixture (blob bytes, rug-pull switch point), so equal specs yield
// byte-identical servers.
struct FixtureSpec {
  Family family = Family::benign;
  std::uint64_t seed = 1;
  // Which benign surface to serve; ignored for malicious families. One of:
  // finance_info, verification, finance_ops, weather_current, weather_monitor,
  // weather_alerts.
  std::string surface;

  bool malicious() const { return family != Family::benign; }
  std::string server_id() const;
};

// Builds the bare server. Throws std::invalid_argument for an unknown benign
// surface.
std::unique_ptr<protocol::ToolServer> make_fixture(const FixtureSpec& spec);

// Server plus the plumbing to talk to it in-process. The runtime borrows the
// server and the connection borrows the runtime, so keep the handle alive for
// as long as the connection is in use (the connection itself is typically
// moved into a gateway).
struct FixtureHandle {
  FixtureSpec spec;
  std::unique_ptr<protocol::ToolServer> server;
  std::unique_ptr<protocol::ServerRuntime> runtime;
  std::unique_ptr<protocol::Connection> connection;
};

FixtureHandle spawn_fixture(const FixtureSpec& spec);

// The standard corpus: all six malicious families plus their six benign
// twins, every spec carrying the given seed.
std::vector<FixtureSpec> default_suite(std::uint64_t seed);

// Number of real (non-mock) calls after which the rug-pull fixture swaps its
// manifest and behaviour. Exposed so tests can predict the switch point.
std::uint64_t rug_pull_switch_call(std::uint64_t seed);

}  // namespace mcpshield::harness
