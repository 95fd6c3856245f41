#include "mcpshield/harness/fixtures.hpp"
#include "mcpshield/protocol/effects.hpp"
#include "mcpshield/protocol/framing.hpp"
#include "mcpshield/protocol/server.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace {

using nlohmann::json;
namespace harness = mcpshield::harness;
namespace protocol = mcpshield::protocol;
using protocol::EffectReply;

// Tunnels tool side effects over the same stdio session the RPC frames use.
// Interposed mode sends effects/attempt and blocks for the client's verdict;
// declared mode reports through a notification and carries on.
class WireEffectChannel : public protocol::EffectChannel {
 public:
  explicit WireEffectChannel(bool interposed) : interposed_(interposed) {}

  EffectReply effect_attempt(const std::string& kind, const std::string& target,
                             const std::string& detail) override {
    if (!interposed_) {
      effect_declared(kind, target, detail);
      return EffectReply::allow;
    }
    json id = "effect-" + std::to_string(++counter_);
    std::cout << protocol::frame_write(protocol::RpcEnvelope::make_request(
                     id, "effects/attempt",
                     json{{"kind", kind}, {"target", target}, {"detail", detail}}))
              << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return EffectReply::deny_continue;  // session is gone
    try {
      auto reply = protocol::frame_read(line);
      if (reply.kind == protocol::RpcEnvelope::Kind::response && reply.id == id) {
        return reply.payload.is_object() && reply.payload.value("allowed", false)
                   ? EffectReply::allow
                   : EffectReply::deny_continue;
      }
    } catch (const protocol::FramingError&) {
    }
    return EffectReply::deny_continue;
  }

  bool effect_declared(const std::string& kind, const std::string& target,
                       const std::string& detail) override {
    std::cout << protocol::frame_write(protocol::RpcEnvelope::make_notification(
                     "notifications/effect",
                     json{{"kind", kind}, {"target", target}, {"detail", detail}}))
              << std::flush;
    return true;
  }

 private:
  bool interposed_;
  int counter_ = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcpshield attack fixture, served over stdio"};
  std::string family = "benign";
  std::string surface = "weather_current";
  std::uint64_t seed = 1;
  std::string effects_mode = "interposed";
  int hang_on_call = 0;

  app.add_option("--family", family, "Fixture family")->capture_default_str();
  app.add_option("--surface", surface, "Benign surface (family=benign only)")
      ->capture_default_str();
  app.add_option("--seed", seed, "Fixture seed")->capture_default_str();
  app.add_option("--effects", effects_mode, "Effect reporting: interposed|declared")
      ->check(CLI::IsMember({"interposed", "declared"}))
      ->capture_default_str();
  app.add_option("--hang-on-call", hang_on_call,
                 "Sleep forever on the Nth tools/call (deadline testing)");
  CLI11_PARSE(app, argc, argv);

  auto fam = harness::family_from_name(family);
  if (!fam) {
    std::cerr << "unknown family: " << family << "\n";
    return 1;
  }
  harness::FixtureSpec spec{*fam, seed, surface};
  std::unique_ptr<protocol::ToolServer> server;
  try {
    server = harness::make_fixture(spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  protocol::ServerRuntime runtime(*server, spec.server_id());
  WireEffectChannel channel(effects_mode == "interposed");

  int calls_seen = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (hang_on_call > 0 && line.find("\"tools/call\"") != std::string::npos &&
        ++calls_seen >= hang_on_call) {
      std::this_thread::sleep_for(std::chrono::hours(24));
    }
    std::vector<std::string> out;
    runtime.handle_line(line, out, &channel);
    for (const auto& reply : out) std::cout << reply;
    std::cout << std::flush;
  }
  return 0;
}
