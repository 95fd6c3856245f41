#pragma once

#include "mcpshield/protocol/errors.hpp"

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>
#include <vector>

namespace mcpshield::protocol {

class EffectChannel;

// Line-oriented duplex channel. write_line sends one complete frame;
// read_line blocks up to the deadline and returns nullopt on orderly EOF.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void write_line(const std::string& line) = 0;
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;

  // Interposition crosses the process boundary out-of-band for in-process
  // servers; real child processes use effects/attempt frames instead, so the
  // default is a no-op.
  virtual void set_effect_channel(EffectChannel* /*channel*/) {}
};

// Server half of an in-process link: consume one request line, append any
// number of reply lines (responses and notifications) to `out`. The channel
// is whatever the client side currently has installed, or null.
using LineHandler = std::function<void(const std::string& line, std::vector<std::string>& out,
                                       EffectChannel* channel)>;

// In-process transport: write_line dispatches synchronously into the handler,
// read_line drains the reply queue. Single-threaded and deterministic, which
// is what the fixture suite and the property tests want.
class InMemoryTransport : public Transport {
 public:
  explicit InMemoryTransport(LineHandler server);

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;
  void set_effect_channel(EffectChannel* channel) override { channel_ = channel; }

  // Lines written so far, as seen by the server side. Tests inspect this to
  // assert wire-level facts (mock flag fidelity, zero-traffic guards).
  const std::vector<std::string>& sent_lines() const { return sent_; }

 private:
  LineHandler server_;
  EffectChannel* channel_ = nullptr;
  std::deque<std::string> inbox_;
  std::vector<std::string> sent_;
};

// Child process speaking frames over its stdin/stdout. Spawn with an argv
// vector; the destructor closes stdin, waits briefly, then escalates to
// SIGTERM/SIGKILL so a wedged server cannot hang the gateway.
class StdioTransport : public Transport {
 public:
  static std::unique_ptr<StdioTransport> spawn(const std::vector<std::string>& argv);
  ~StdioTransport() override;

  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;

  pid_t pid() const { return pid_; }

 private:
  StdioTransport(pid_t pid, int to_child, int from_child);

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace mcpshield::protocol
