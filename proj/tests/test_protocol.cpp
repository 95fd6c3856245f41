#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mcpshield/protocol/canonical.hpp"
#include "mcpshield/protocol/connection.hpp"
#include "mcpshield/protocol/errors.hpp"
#include "mcpshield/protocol/framing.hpp"
#include "mcpshield/protocol/server.hpp"
#include "mcpshield/protocol/transport.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <thread>
#include <vector>

using namespace mcpshield;
using protocol::Manifest;
using protocol::ToolMetadata;
using protocol::ToolResult;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Reference SHA-256, transcribed from the FIPS 180-4 pseudocode, independent
// of the OpenSSL-backed production code. The known-vector checks below keep
// the oracle itself honest.
// ---------------------------------------------------------------------------
namespace oracle {

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

std::string sha256_hex(const std::string& input) {
  static const std::uint32_t k[64] = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
      0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
      0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
      0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
      0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
      0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
      0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
      0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
      0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
      0xc67178f2};
  std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                        0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

  std::vector<unsigned char> msg(input.begin(), input.end());
  const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8u;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i) msg.push_back(static_cast<unsigned char>((bit_len >> (i * 8)) & 0xff));

  for (std::size_t off = 0; off < msg.size(); off += 64) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t(msg[off + 4 * i]) << 24) | (std::uint32_t(msg[off + 4 * i + 1]) << 16) |
             (std::uint32_t(msg[off + 4 * i + 2]) << 8) | std::uint32_t(msg[off + 4 * i + 3]);
    }
    for (int i = 16; i < 64; ++i) {
      std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
    std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      std::uint32_t ch = (e & f) ^ (~e & g);
      std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
      std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      std::uint32_t t2 = s0 + maj;
      hh = g; g = f; f = e; e = d + t1;
      d = c; c = b; b = a; a = t1 + t2;
    }
    h[0] += a; h[1] += b; h[2] += c; h[3] += d;
    h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
  }

  std::ostringstream out;
  for (std::uint32_t v : h) out << std::hex << std::setw(8) << std::setfill('0') << v;
  return out.str();
}

}  // namespace oracle

namespace {

// Small deterministic generator for the property tests; xorshift is plenty.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

std::string random_text(Rng& rng, std::size_t max_len) {
  static const char pool[] = "abcdefghijklmnopqrstuvwxyz0123456789 _-{}\"\\/\n\t";
  std::string out;
  std::size_t len = rng.below(max_len + 1);
  out.reserve(len);
  for (std::size_t i = 0; i < len; ++i) out += pool[rng.below(sizeof(pool) - 1)];
  return out;
}

json random_payload(Rng& rng, int depth) {
  switch (depth <= 0 ? rng.below(4) : rng.below(6)) {
    case 0: return json(random_text(rng, 12));
    case 1: return json(static_cast<std::int64_t>(rng.next() % 100000));
    case 2: return json(rng.below(2) == 0);
    case 3: return json();
    case 4: {
      json arr = json::array();
      for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) {
        arr.push_back(random_payload(rng, depth - 1));
      }
      return arr;
    }
    default: {
      json obj = json::object();
      for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) {
        obj["k" + std::to_string(rng.below(8))] = random_payload(rng, depth - 1);
      }
      return obj;
    }
  }
}

ToolMetadata make_tool(std::string name, std::string description, json schema) {
  ToolMetadata t;
  t.name = std::move(name);
  t.description = std::move(description);
  t.input_schema = std::move(schema);
  return t;
}

json empty_object_schema() {
  return json{{"type", "object"}, {"properties", json::object()}, {"required", json::array()}};
}

Manifest sample_manifest(const std::string& server_id) {
  Manifest m;
  m.server_id = server_id;
  m.tools = {
      make_tool("beta", "second tool",
                json{{"type", "object"},
                     {"properties", json{{"x", json{{"type", "integer"}}}}},
                     {"required", json::array({"x"})}}),
      make_tool("alpha", "first tool", empty_object_schema()),
      make_tool("gamma", "third tool",
                json{{"type", "object"},
                     {"properties", json{{"s", json{{"type", "string"}}}}},
                     {"required", json::array()}}),
  };
  return m;
}

// Plain echo server used for wire-level assertions.
class EchoServer : public protocol::ToolServer {
 public:
  Manifest manifest() override {
    Manifest m;
    m.server_id = "echo";
    m.tools = {make_tool("echo", "echoes the mock flag",
                         json{{"type", "object"},
                              {"properties", json{{"msg", json{{"type", "string"}}}}},
                              {"required", json::array({"msg"})}})};
    return m;
  }
  ToolResult call(const std::string&, const json& arguments,
                  protocol::CallContext& ctx) override {
    return ToolResult::make_text((ctx.mock ? "mock:" : "real:") +
                                 arguments.value("msg", ""));
  }
};

// Reports whether an attempted effect came back authorized.
class EffectProbeServer : public protocol::ToolServer {
 public:
  Manifest manifest() override {
    Manifest m;
    m.server_id = "effect-probe";
    m.tools = {make_tool("poke", "attempts one file write", empty_object_schema())};
    return m;
  }
  ToolResult call(const std::string&, const json&, protocol::CallContext& ctx) override {
    bool ok = protocol::request_effect(ctx.effects, "file_write", "out.txt", "data");
    return ToolResult::make_text(ok ? "allowed" : "denied");
  }
};

std::vector<std::string> fixture_argv(std::initializer_list<const char*> extra) {
  const char* bin = std::getenv("MCPSHIELD_FIXTURE_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "MCPSHIELD_FIXTURE_BIN must point at the fixture binary");
  std::vector<std::string> argv{bin};
  for (const char* a : extra) argv.emplace_back(a);
  return argv;
}

}  // namespace

TEST_CASE("reference sha256 matches the published vectors") {
  CHECK(oracle::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(oracle::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(oracle::sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("production sha256 agrees with the reference across lengths") {
  CHECK(protocol::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  Rng rng(7);
  // Cover every padding branch: all residues mod 64, plus multi-block input.
  for (std::size_t len = 0; len <= 200; ++len) {
    std::string s;
    s.reserve(len);
    for (std::size_t i = 0; i < len; ++i) s += static_cast<char>('!' + rng.below(90));
    CAPTURE(len);
    CHECK(protocol::sha256_hex(s) == oracle::sha256_hex(s));
  }
}

TEST_CASE("fingerprint is invariant under tool order and server id") {
  Manifest base = sample_manifest("ops-a");
  const std::string fp = protocol::fingerprint(base);

  Manifest renamed = base;
  renamed.server_id = "entirely-different";
  CHECK(protocol::fingerprint(renamed) == fp);

  Manifest shuffled = base;
  std::sort(shuffled.tools.begin(), shuffled.tools.end(),
            [](const ToolMetadata& a, const ToolMetadata& b) { return a.name > b.name; });
  CHECK(protocol::fingerprint(shuffled) == fp);

  // Every permutation of three tools lands on the same canonical bytes.
  std::vector<ToolMetadata> tools = base.tools;
  std::sort(tools.begin(), tools.end(),
            [](const ToolMetadata& a, const ToolMetadata& b) { return a.name < b.name; });
  do {
    Manifest m;
    m.server_id = "perm";
    m.tools = tools;
    CHECK(protocol::canonicalize_manifest(m) == protocol::canonicalize_manifest(base));
  } while (std::next_permutation(tools.begin(), tools.end(),
                                 [](const ToolMetadata& a, const ToolMetadata& b) {
                                   return a.name < b.name;
                                 }));
}

TEST_CASE("fingerprint separates manifests that differ in substance") {
  Manifest base = sample_manifest("ops-a");
  const std::string fp = protocol::fingerprint(base);

  Manifest desc = base;
  desc.tools[0].description += " (updated)";
  CHECK(protocol::fingerprint(desc) != fp);

  Manifest schema = base;
  schema.tools[0].input_schema["properties"]["x"]["type"] = "string";
  CHECK(protocol::fingerprint(schema) != fp);

  Manifest renamed = base;
  renamed.tools[1].name = "alpha2";
  CHECK(protocol::fingerprint(renamed) != fp);

  Manifest fewer = base;
  fewer.tools.pop_back();
  CHECK(protocol::fingerprint(fewer) != fp);
}

TEST_CASE("canonical bytes have the documented shape") {
  Manifest m = sample_manifest("shape");
  json doc = json::parse(protocol::canonicalize_manifest(m));

  REQUIRE(doc.is_object());
  CHECK(doc.size() == 1);
  REQUIRE(doc.contains("tools"));
  REQUIRE(doc["tools"].is_array());
  REQUIRE(doc["tools"].size() == 3);

  std::vector<std::string> names;
  for (const auto& t : doc["tools"]) {
    REQUIRE(t.is_object());
    CHECK(t.size() == 3);
    CHECK(t.contains("description"));
    CHECK(t.contains("input_schema"));
    CHECK(t.contains("name"));
    names.push_back(t["name"].get<std::string>());
  }
  CHECK(std::is_sorted(names.begin(), names.end()));
  // server_id never reaches the canonical form.
  CHECK(protocol::canonicalize_manifest(m).find("shape") == std::string::npos);
}

TEST_CASE("framing round-trips ten thousand generated envelopes") {
  Rng rng(42);
  static const char* methods[] = {"initialize", "tools/list", "tools/call",
                                  "effects/attempt", "notifications/effect"};
  for (int i = 0; i < 10000; ++i) {
    protocol::RpcEnvelope env;
    json id;
    switch (rng.below(3)) {
      case 0: id = json(static_cast<std::int64_t>(rng.below(1 << 20))); break;
      case 1: id = json("id-" + std::to_string(rng.below(1000))); break;
      default: id = json(); break;
    }
    switch (rng.below(3)) {
      case 0:
        env = protocol::RpcEnvelope::make_request(id, methods[rng.below(5)],
                                                  random_payload(rng, 3));
        break;
      case 1:
        if (id.is_null()) id = json(1);  // responses need a concrete id
        env = protocol::RpcEnvelope::make_response(id, random_payload(rng, 3));
        break;
      default:
        env = protocol::RpcEnvelope::make_error(id, -32000 - static_cast<int>(rng.below(100)),
                                                random_text(rng, 24));
        break;
    }

    auto line = protocol::frame_write(env);
    REQUIRE(line.back() == '\n');
    auto back = protocol::frame_read(line);
    CAPTURE(line);
    CHECK(back.kind == env.kind);
    CHECK(back.id == env.id);
    CHECK(back.method == env.method);
    CHECK(back.payload == env.payload);
  }
}

TEST_CASE("frame_read rejects garbage and oversized input") {
  CHECK_THROWS_AS(protocol::frame_read("not json"), protocol::FramingError);
  CHECK_THROWS_AS(protocol::frame_read("{\"jsonrpc\":\"1.0\",\"id\":1,\"method\":\"x\"}"),
                  protocol::FramingError);
  CHECK_THROWS_AS(protocol::frame_read("{\"jsonrpc\":\"2.0\",\"id\":{},\"method\":\"x\"}"),
                  protocol::FramingError);
  std::string huge = "{\"jsonrpc\":\"2.0\",\"id\":1,\"method\":\"";
  huge += std::string(protocol::kMaxFrameBytes, 'a');
  huge += "\"}";
  CHECK_THROWS_AS(protocol::frame_read(huge), protocol::FramingError);
}

TEST_CASE("the mock flag travels on the wire exactly when asked for") {
  EchoServer server;
  protocol::ServerRuntime runtime(server, "echo");
  auto conn = protocol::connect_in_memory(runtime);
  conn->list_tools("echo");
  auto& transport = dynamic_cast<protocol::InMemoryTransport&>(conn->transport());

  auto mocked = conn->call_tool("echo", json{{"msg", "hi"}}, {.mock = true});
  CHECK(mocked.text() == "mock:hi");
  json mock_frame = json::parse(transport.sent_lines().back());
  REQUIRE(mock_frame["params"].contains("_meta"));
  CHECK(mock_frame["params"]["_meta"][protocol::kMockFlagKey] == true);

  auto real = conn->call_tool("echo", json{{"msg", "hi"}});
  CHECK(real.text() == "real:hi");
  json real_frame = json::parse(transport.sent_lines().back());
  CHECK(!real_frame["params"].contains("_meta"));
}

TEST_CASE("local validation failures produce zero wire traffic") {
  EchoServer server;
  protocol::ServerRuntime runtime(server, "echo");
  auto conn = protocol::connect_in_memory(runtime);
  conn->list_tools("echo");
  auto& transport = dynamic_cast<protocol::InMemoryTransport&>(conn->transport());
  const std::size_t before = transport.sent_lines().size();

  CHECK_THROWS_AS(conn->call_tool("no_such_tool", json::object()), protocol::ProtocolError);
  CHECK_THROWS_AS(conn->call_tool("echo", json::object()), protocol::ProtocolError);  // msg missing
  CHECK_THROWS_AS(conn->call_tool("echo", json{{"msg", 7}}), protocol::ProtocolError);
  CHECK_THROWS_AS(conn->call_tool("echo", json{{"msg", "x"}, {"extra", 1}}),
                  protocol::ProtocolError);

  CHECK(transport.sent_lines().size() == before);
}

TEST_CASE("a reply with a foreign id is a protocol fault") {
  auto transport = std::make_unique<protocol::InMemoryTransport>(
      [](const std::string& line, std::vector<std::string>& out, protocol::EffectChannel*) {
        auto request = protocol::frame_read(line);
        if (request.method == "initialize") {
          out.push_back(protocol::frame_write(protocol::RpcEnvelope::make_response(
              request.id, json{{"protocolVersion", "2024-11-05"}})));
        } else if (request.method == "tools/list") {
          json tools = json::array(
              {json{{"name", "echo"},
                    {"description", "d"},
                    {"input_schema", empty_object_schema()}}});
          out.push_back(protocol::frame_write(
              protocol::RpcEnvelope::make_response(request.id, json{{"tools", tools}})));
        } else {
          // Deliberately pair the result with an id nobody asked about.
          out.push_back(protocol::frame_write(protocol::RpcEnvelope::make_response(
              json(999999), ToolResult::make_text("x").to_json())));
        }
      });
  protocol::Connection conn(std::move(transport));
  conn.list_tools("rogue");
  CHECK_THROWS_WITH_AS(conn.call_tool("echo", json::object()),
                       "reply id does not match outstanding request", protocol::ProtocolError);
}

TEST_CASE("with no effect channel installed nothing is authorized") {
  EffectProbeServer server;
  protocol::ServerRuntime runtime(server, "effect-probe");
  auto conn = protocol::connect_in_memory(runtime);
  conn->list_tools("effect-probe");
  CHECK(conn->call_tool("poke", json::object()).text() == "denied");
}

TEST_CASE("stdio transport: handshake, list, call against the fixture binary") {
  auto argv = fixture_argv({"--family", "benign", "--surface", "weather_current"});
  protocol::Connection conn(protocol::StdioTransport::spawn(argv));

  auto init = conn.initialize();
  CHECK(init["protocolVersion"] == "2024-11-05");

  auto manifest = conn.list_tools("weather");
  REQUIRE(manifest.tools.size() == 2);
  CHECK(manifest.tools[0].name == "get_current_weather");

  auto result = conn.call_tool("get_current_weather", json{{"city", "Austin"}});
  CHECK(!result.is_error);
  CHECK(result.text().find("Austin") != std::string::npos);
}

TEST_CASE("stdio transport: a wedged server trips the deadline, not the test") {
  auto argv = fixture_argv({"--family", "benign", "--surface", "weather_current",
                            "--hang-on-call", "1"});
  protocol::Connection conn(protocol::StdioTransport::spawn(argv));
  conn.list_tools("weather");
  CHECK_THROWS_AS(conn.call_tool("get_current_weather", json{{"city", "Austin"}},
                                 {.mock = false, .timeout = std::chrono::milliseconds(300)}),
                  protocol::TimeoutError);
  // Destructor escalation (close, SIGTERM, SIGKILL) reaps the child; the test
  // finishing at all is the assertion.
}

TEST_CASE("stdio transport: a dead server surfaces as a transport error") {
  protocol::Connection conn(protocol::StdioTransport::spawn({"/bin/true"}));
  CHECK_THROWS_AS(conn.initialize(), protocol::ProtocolError);
}
