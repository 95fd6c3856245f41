#include "mcpshield/judge/verdicts.hpp"

namespace mcpshield::judge {

json MockBatch::to_json() const {
  json mocks_json = json::array();
  for (const auto& args : mocks) mocks_json.push_back(json{{"arguments", args}});
  return json{{"tool_name", tool_name}, {"mocks", mocks_json}};
}

json PerMockVerdict::to_json() const {
  return json{{"verdict", denied() ? "deny" : "ok"}, {"reason", reason}};
}

json ManifestVerdict::to_json() const {
  return json{{"trusted", trusted}, {"reason", reason}, {"flags", flags}};
}

json DomainGrant::to_json() const { return json{{"allowed_domains", allowed_domains}}; }

json ExecVerdict::to_json() const {
  return json{{"trusted", trusted}, {"reason", reason}, {"flags", flags}};
}

json DriftVerdict::to_json() const {
  return json{{"drift_score", drift_score}, {"reason", reason}, {"signals", signals}};
}

json JudgeUsage::to_json() const {
  return json{{"prompt_tokens", prompt_tokens},
              {"completion_tokens", completion_tokens},
              {"wall_time", wall_time}};
}

std::uint64_t estimate_tokens(std::size_t characters) {
  return static_cast<std::uint64_t>((characters + 3) / 4);  // ceil(chars / 4)
}

}  // namespace mcpshield::judge
