#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "bcfl/chain/digest.hpp"
#include "bcfl/learners.hpp"

namespace bcfl::chain {

// In-process stand-in for a public content-addressed store (IPFS-like).
// Keys are SHA-256 of the stored bytes; entries are never overwritten.
class ContentStore {
 public:
  Digest put_bytes(std::vector<std::uint8_t> blob);
  Digest put(const ParamVector& params) { return put_bytes(serialize(params)); }

  std::optional<std::vector<std::uint8_t>> get_bytes(const Digest& d) const;
  std::optional<ParamVector> get(const Digest& d) const;
  bool contains(const Digest& d) const { return blobs_.contains(d); }
  std::size_t size() const { return blobs_.size(); }

 private:
  std::map<Digest, std::vector<std::uint8_t>> blobs_;
};

inline Digest digest_of(const ParamVector& p) { return sha256(serialize(p)); }

}  // namespace bcfl::chain
