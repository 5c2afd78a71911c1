#include "bcfl/chain/content_store.hpp"

namespace bcfl::chain {

Digest ContentStore::put_bytes(std::vector<std::uint8_t> blob) {
  const Digest d = sha256(blob);
  blobs_.try_emplace(d, std::move(blob));
  return d;
}

std::optional<std::vector<std::uint8_t>> ContentStore::get_bytes(const Digest& d) const {
  auto it = blobs_.find(d);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

std::optional<ParamVector> ContentStore::get(const Digest& d) const {
  auto it = blobs_.find(d);
  if (it == blobs_.end()) return std::nullopt;
  return deserialize(it->second);
}

}  // namespace bcfl::chain
