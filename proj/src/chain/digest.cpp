#include "bcfl/chain/digest.hpp"

#include <openssl/sha.h>

#include <stdexcept>

namespace bcfl::chain {

std::string Digest::hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

Digest Digest::from_hex(std::string_view hex) {
  if (hex.size() != 64) throw std::invalid_argument("digest hex must be 64 characters");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw std::invalid_argument("digest hex contains a non-hex character");
  };
  Digest d;
  for (std::size_t i = 0; i < 32; ++i)
    d.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return d;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d;
  SHA256(data.data(), data.size(), d.bytes.data());
  return d;
}

Digest sha256(std::string_view data) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Digest randomness_beacon(const Digest& previous_finalized, int round) {
  std::array<std::uint8_t, 40> buf{};
  std::copy(previous_finalized.bytes.begin(), previous_finalized.bytes.end(), buf.begin());
  const auto r = static_cast<std::uint64_t>(round);
  for (int i = 0; i < 8; ++i) buf[32 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(r >> (8 * i));
  return sha256(buf);
}

}  // namespace bcfl::chain
