#pragma once

// Verifiable random function mock for role assignment.
//
// proof  = Ed25519 signature of the input (deterministic per RFC 8032)
// output = SHA-256 of the proof
//
// Anyone holding the public key can check that `output` was derived from
// `input` by the owner of the secret key. This is a signature-based stand-in,
// not an ECVRF; the interface is what a real VRF would expose.

#include <array>
#include <cstdint>
#include <span>

#include "bcfl/chain/digest.hpp"

namespace bcfl::chain {

using VrfPublicKey = std::array<std::uint8_t, 32>;

struct VrfKeyPair {
  std::array<std::uint8_t, 32> secret{};
  VrfPublicKey public_key{};

  // Deterministic key generation from a 32-byte seed.
  static VrfKeyPair from_seed(const Digest& seed);
};

struct VrfProof {
  std::array<std::uint8_t, 64> bytes{};
  friend bool operator==(const VrfProof&, const VrfProof&) = default;
};

struct VrfResult {
  Digest output;
  VrfProof proof;
};

VrfResult vrf_eval(const VrfKeyPair& key, std::span<const std::uint8_t> input);

// Never throws; any malformed or mismatched tuple yields false.
bool vrf_verify(const VrfPublicKey& pk, std::span<const std::uint8_t> input, const Digest& output,
                const VrfProof& proof) noexcept;

}  // namespace bcfl::chain
