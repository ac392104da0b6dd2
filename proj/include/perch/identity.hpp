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

#ifndef PERCH_IDENTITY_HPP_
#define PERCH_IDENTITY_HPP_

#include <functional>
#include <set>

#include "perch/api.hpp"

namespace perch::uas {

// Effective permissions at some height, derived purely by replaying the
// permission records of an intact chain in order.
struct PermissionSet {
  std::map<Digest, std::set<PermissionScope>> scopes;
  uint64_t height = 0;  // header height the set was computed at
  std::vector<std::string> replay_log;  // flagged anomalies (no-op revokes)

  bool allows(const Digest& fp, PermissionScope scope) const {
    auto it = scopes.find(fp);
    return it != scopes.end() && it->second.contains(scope);
  }

  // Grant adds a scope, revoke removes it. A revoke of a fingerprint that
  // never appeared is recorded as a no-op and flagged.
  void apply(const PermissionRecord& rec) {
    if (rec.action == PermissionAction::grant) {
      scopes[rec.subject_fingerprint].insert(rec.scope);
      return;
    }
    auto it = scopes.find(rec.subject_fingerprint);
    if (it == scopes.end() || !it->second.contains(rec.scope)) {
      replay_log.push_back("no-op revoke of " + rec.subject_fingerprint.hex() +
                           " scope " + to_string(rec.scope));
      return;
    }
    it->second.erase(rec.scope);
    if (it->second.empty()) scopes.erase(it);
  }
};

// Replays blocks 0..n-1, verifying every link and the creator signatures as
// it goes; permissions are only computable over an intact chain. Throws
// BrokenChain with the offending height.
inline PermissionSet effective_permissions(std::span<const Block> blocks) {
  ChainCursor cursor;
  PermissionSet perms;
  for (const Block& b : blocks) {
    VerifyResult r = cursor.advance(b);
    if (!r.ok())
      throw Error(errc::kBrokenChain,
                  std::string("verification failed: ") + r.reason(),
                  "height " + std::to_string(b.header.height));
    for (const BlockEntry& e : b.entries)
      if (const auto* rec = std::get_if<PermissionRecord>(&e))
        perms.apply(*rec);
    perms.height = b.header.height;
  }
  return perms;
}

// Same replay over a gateway-served chain up to and including `height`
// (defaults to the whole chain).
inline PermissionSet effective_permissions(
    GatewayApi& gateway, const ChainId& chain,
    std::optional<uint64_t> height = std::nullopt) {
  uint64_t length = gateway.chain_length(chain);
  uint64_t upto = height ? std::min(*height + 1, length) : length;
  std::vector<Block> blocks;
  blocks.reserve(upto);
  for (uint64_t h = 0; h < upto; ++h)
    blocks.push_back(gateway.read_block(chain, h));
  return effective_permissions(blocks);
}

struct GrantResult {
  PermissionRecord record;
  bool announced;  // a certificate announcement was enqueued alongside
};

struct RevokeResult {
  PermissionRecord record;
  bool flagged;  // subject was never announced on this chain
};

// The User Account Service: certificate authority for customers,
// institutions, and services. Holds only its signing key and root
// certificate; everything else it needs lives on the chains themselves.
class IdentityService {
 public:
  IdentityService(KeyPair keys, Certificate root_cert)
      : keys_(std::move(keys)), cert_(std::move(root_cert)) {
    if (cert_.role != Role::uas || !cert_.self_signed())
      throw Error(errc::kInvalidCertificate,
                  "identity service needs a self-signed UAS root");
    if (cert_.public_key != keys_.pub)
      throw Error(errc::kSignatureMismatch,
                  "UAS key pair does not match root certificate");
  }

  // Creates a fresh UAS with a self-signed root valid for `validity` seconds.
  static IdentityService create(const std::string& name, const KeyPair& keys,
                                UnixSeconds now, UnixSeconds validity) {
    Certificate root;
    root.subject_id = name;
    root.role = Role::uas;
    root.public_key = keys.pub;
    root.issued_at = now;
    root.expires_at = now + validity;
    root.issuer_fingerprint = Digest{};  // self-signed
    root.issuer_sig = sign(keys.secret, certificate_signing_bytes(root));
    return IdentityService(keys, root);
  }

  const Certificate& certificate() const { return cert_; }
  Digest fingerprint() const { return perch::fingerprint(cert_); }

  Certificate issue_certificate(const std::string& subject_id, Role role,
                                const PublicKey& pub,
                                std::map<std::string, std::string> aux,
                                UnixSeconds issued_at,
                                UnixSeconds expires_at) const {
    if (expires_at <= issued_at)
      throw Error(errc::kInvalidValidity,
                  "certificate validity window is empty");
    Certificate c;
    c.subject_id = subject_id;
    c.role = role;
    c.public_key = pub;
    c.aux = std::move(aux);
    c.issued_at = issued_at;
    c.expires_at = expires_at;
    c.issuer_fingerprint = fingerprint();
    c.issuer_sig = sign(keys_.secret, certificate_signing_bytes(c));
    return c;
  }

  // Certificates for institutions carry a reference to where the customer's
  // API token for that institution lives, never the token itself.
  Certificate issue_institution_certificate(const std::string& name,
                                            const PublicKey& pub,
                                            const std::string& api_token_ref,
                                            UnixSeconds now,
                                            UnixSeconds validity) const {
    return issue_certificate(name, Role::institution, pub,
                             {{"api_token_ref", api_token_ref}}, now,
                             now + validity);
  }

  PermissionRecord make_record(const Digest& subject, PermissionAction action,
                               PermissionScope scope, UnixSeconds now) const {
    PermissionRecord rec;
    rec.subject_fingerprint = subject;
    rec.action = action;
    rec.scope = scope;
    rec.issued_by = fingerprint();
    rec.issued_at = now;
    rec.uas_sig = sign(keys_.secret, permission_signing_bytes(rec));
    return rec;
  }

  // Issues the customer's root certificate and the self-authenticating
  // genesis block granting the given BCS the right to build blocks.
  std::pair<Certificate, Block> init_customer(const std::string& display_name,
                                              const KeyPair& customer_keys,
                                              const Certificate& bcs_cert,
                                              UnixSeconds now,
                                              UnixSeconds validity) const {
    if (now < cert_.issued_at)
      throw Error(errc::kClockSkew,
                  "clock is earlier than the UAS root issuance");
    if (bcs_cert.role != Role::bcs)
      throw Error(errc::kInvalidCertificate, "expected a bcs certificate",
                  to_string(bcs_cert.role));
    if (!bcs_cert.valid_at(now))
      throw Error(errc::kInvalidCertificate,
                  "BCS certificate not valid now");
    Certificate customer = issue_certificate(
        display_name, Role::customer, customer_keys.pub, {}, now,
        now + validity);
    PermissionRecord grant =
        make_record(perch::fingerprint(bcs_cert), PermissionAction::grant,
                    PermissionScope::submit_transactions, now);
    Block genesis = make_genesis(customer, cert_, grant, keys_, now);
    return {std::move(customer), std::move(genesis)};
  }

  // Grants `scope` to the institution on the given chain. The record and a
  // certificate announcement ride the pending queue into the next block; the
  // announcement lets later verifiers resolve the fingerprint.
  GrantResult grant(GatewayApi& gateway, BuilderApi& builder,
                    const ChainId& chain, const Certificate& institution_cert,
                    PermissionScope scope, UnixSeconds now) const {
    gateway.head(chain);  // UnknownChain surfaces here
    Digest subject = perch::fingerprint(institution_cert);
    GrantResult out{make_record(subject, PermissionAction::grant, scope, now),
                    false};
    if (!is_announced(gateway, chain, subject)) {
      builder.enqueue_record(chain, BlockEntry(institution_cert), now);
      out.announced = true;
    }
    builder.enqueue_record(chain, BlockEntry(out.record), now);
    return out;
  }

  RevokeResult revoke(GatewayApi& gateway, BuilderApi& builder,
                      const ChainId& chain, const Digest& subject,
                      PermissionScope scope, UnixSeconds now) const {
    gateway.head(chain);
    RevokeResult out{
        make_record(subject, PermissionAction::revoke, scope, now),
        !is_announced(gateway, chain, subject)};
    builder.enqueue_record(chain, BlockEntry(out.record), now);
    return out;
  }

 private:
  bool is_announced(GatewayApi& gateway, const ChainId& chain,
                    const Digest& fp) const {
    uint64_t length = gateway.chain_length(chain);
    for (uint64_t h = 0; h < length; ++h) {
      Block b = gateway.read_block(chain, h);
      for (const BlockEntry& e : b.entries) {
        const auto* cert = std::get_if<Certificate>(&e);
        if (cert != nullptr && perch::fingerprint(*cert) == fp) return true;
      }
    }
    return false;
  }

  KeyPair keys_;
  Certificate cert_;
};

}  // namespace perch::uas

#endif  // PERCH_IDENTITY_HPP_
