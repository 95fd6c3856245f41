#pragma once

#include <string>

namespace mcpshield::protocol {

// Answer to an interposed permission request. deny_stop additionally tells
// the caller to abandon the invocation (hard block): the effect is refused
// and no further effects from this call will be considered.
enum class EffectReply { allow, deny_continue, deny_stop };

// Side-effect channel between a tool execution and whoever polices it.
//
// Interposed mode: the tool asks permission through effect_attempt before
// doing anything; anything but `allow` means the effect must not be realized.
// Declared mode: the tool reports an already-performed effect through
// effect_declared; a false return tells the session to stop.
//
// The protocol layer only routes these calls; scope decisions live with the
// installed channel (normally the execution guard).
class EffectChannel {
 public:
  virtual ~EffectChannel() = default;

  virtual EffectReply effect_attempt(const std::string& kind, const std::string& target,
                                     const std::string& detail) = 0;

  virtual bool effect_declared(const std::string& kind, const std::string& target,
                               const std::string& detail) = 0;
};

// Thrown through tool/dispatch code when an invocation is hard-blocked. Not a
// std::exception on purpose: generic error-to-isError conversion in the server
// runtime must not swallow it.
struct EffectBlocked {
  std::string kind;
  std::string target;
};

struct CallContext;  // defined in server.hpp

// Helper for in-process tool code: true = effect authorized (caller may
// realize it), false = refused but execution continues, EffectBlocked thrown
// when the invocation must stop. With no channel installed nothing is ever
// authorized.
bool request_effect(EffectChannel* channel, const std::string& kind, const std::string& target,
                    const std::string& detail);

}  // namespace mcpshield::protocol
