// Copyright 2026 The Perch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PERCH_CRYPTO_HPP_
#define PERCH_CRYPTO_HPP_

#include <sodium.h>

#include <stdexcept>

#include "perch/types.hpp"

namespace perch {

// The one place the primitives are pinned. Swapping either means a new,
// incompatible chain format.
inline constexpr const char* kHashAlgorithm = "SHA-256";
inline constexpr const char* kSignatureAlgorithm = "Ed25519";

namespace detail {
inline void crypto_init() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}
}  // namespace detail

inline Digest chain_digest(ByteView data) {
  detail::crypto_init();
  Digest out;
  crypto_hash_sha256(out.value.data(), data.data(), data.size());
  return out;
}

inline KeyPair generate_keypair() {
  detail::crypto_init();
  KeyPair kp;
  crypto_sign_ed25519_keypair(kp.pub.value.data(), kp.secret.value.data());
  return kp;
}

// Deterministic key derivation for reproducible harness runs.
inline KeyPair keypair_from_seed(const std::array<uint8_t, 32>& seed) {
  detail::crypto_init();
  KeyPair kp;
  crypto_sign_ed25519_seed_keypair(kp.pub.value.data(),
                                   kp.secret.value.data(), seed.data());
  return kp;
}

inline Signature sign(const SecretKey& sk, ByteView msg) {
  detail::crypto_init();
  Signature sig;
  crypto_sign_ed25519_detached(sig.value.data(), nullptr, msg.data(),
                               msg.size(), sk.value.data());
  return sig;
}

inline bool verify(const PublicKey& pk, ByteView msg, const Signature& sig) {
  detail::crypto_init();
  return crypto_sign_ed25519_verify_detached(sig.value.data(), msg.data(),
                                             msg.size(),
                                             pk.value.data()) == 0;
}

}  // namespace perch

#endif  // PERCH_CRYPTO_HPP_
