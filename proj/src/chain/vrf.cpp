#include "bcfl/chain/vrf.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace bcfl::chain {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

Digest output_of(const VrfProof& proof) { return sha256(proof.bytes); }

}  // namespace

VrfKeyPair VrfKeyPair::from_seed(const Digest& seed) {
  VrfKeyPair kp;
  kp.secret = seed.bytes;
  PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, kp.secret.data(), kp.secret.size()));
  if (!key) throw std::runtime_error("vrf: could not create Ed25519 key");
  std::size_t len = kp.public_key.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_key.data(), &len) != 1 || len != 32)
    throw std::runtime_error("vrf: could not derive public key");
  return kp;
}

VrfResult vrf_eval(const VrfKeyPair& key, std::span<const std::uint8_t> input) {
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, key.secret.data(), key.secret.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1)
    throw std::runtime_error("vrf: signing context setup failed");
  VrfResult r;
  std::size_t len = r.proof.bytes.size();
  if (EVP_DigestSign(ctx.get(), r.proof.bytes.data(), &len, input.data(), input.size()) != 1 || len != 64)
    throw std::runtime_error("vrf: signing failed");
  r.output = output_of(r.proof);
  return r;
}

bool vrf_verify(const VrfPublicKey& pk, std::span<const std::uint8_t> input, const Digest& output,
                const VrfProof& proof) noexcept {
  if (output_of(proof) != output) return false;
  PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pk.data(), pk.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx) return false;
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), proof.bytes.data(), proof.bytes.size(), input.data(), input.size()) == 1;
}

}  // namespace bcfl::chain
