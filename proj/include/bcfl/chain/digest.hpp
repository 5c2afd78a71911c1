#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace bcfl::chain {

// 256-bit SHA-256 digest.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  static Digest from_hex(std::string_view hex);

  friend auto operator<=>(const Digest&, const Digest&) = default;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

// Per-round randomness: SHA-256(previous finalized digest || round as u64 LE).
Digest randomness_beacon(const Digest& previous_finalized, int round);

}  // namespace bcfl::chain
