#include "mcpshield/protocol/canonical.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <stdexcept>

namespace mcpshield::protocol {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0f]);
  }
  return out;
}

std::string canonicalize_manifest(const Manifest& manifest) {
  // nlohmann object keys live in a std::map, so every nesting level comes out
  // lexicographically sorted by itself; tool order is the one thing we sort.
  std::vector<const ToolMetadata*> ordered;
  ordered.reserve(manifest.tools.size());
  for (const auto& t : manifest.tools) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const ToolMetadata* a, const ToolMetadata* b) { return a->name < b->name; });

  json tools = json::array();
  for (const auto* t : ordered) {
    tools.push_back(json{
        {"name", t->name}, {"description", t->description}, {"input_schema", t->input_schema}});
  }
  return json{{"tools", tools}}.dump();
}

std::string fingerprint(const Manifest& manifest) {
  return sha256_hex(canonicalize_manifest(manifest));
}

}  // namespace mcpshield::protocol
