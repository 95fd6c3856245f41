#include "mcpshield/protocol/effects.hpp"

namespace mcpshield::protocol {

bool request_effect(EffectChannel* channel, const std::string& kind, const std::string& target,
                    const std::string& detail) {
  if (channel == nullptr) return false;
  switch (channel->effect_attempt(kind, target, detail)) {
    case EffectReply::allow:
      return true;
    case EffectReply::deny_continue:
      return false;
    case EffectReply::deny_stop:
      throw EffectBlocked{kind, target};
  }
  return false;
}

}  // namespace mcpshield::protocol
