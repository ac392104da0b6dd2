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

#ifndef PERCH_BLOCK_HPP_
#define PERCH_BLOCK_HPP_

#include <optional>

#include "perch/codec.hpp"

namespace perch {

enum class VerifyStatus : uint8_t {
  ok = 0,
  bad_link,
  bad_data_digest,
  bad_signature,
  bad_height,
  bad_order,
};

inline const char* to_string(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::ok: return "ok";
    case VerifyStatus::bad_link: return "bad-link";
    case VerifyStatus::bad_data_digest: return "bad-data-digest";
    case VerifyStatus::bad_signature: return "bad-signature";
    case VerifyStatus::bad_height: return "bad-height";
    case VerifyStatus::bad_order: return "bad-order";
  }
  return "?";
}

// Verification failures are values, not exceptions.
struct VerifyResult {
  VerifyStatus status = VerifyStatus::ok;
  std::string detail;

  bool ok() const { return status == VerifyStatus::ok; }
  const char* reason() const { return to_string(status); }

  static VerifyResult pass() { return {}; }
  static VerifyResult fail(VerifyStatus s, std::string d = {}) {
    return {s, std::move(d)};
  }
};

// Fingerprint-addressed certificates collected while walking a chain.
class CertificateIndex {
 public:
  void add(const Certificate& cert) { by_fp_.insert({fingerprint(cert), cert}); }

  const Certificate* find(const Digest& fp) const {
    auto it = by_fp_.find(fp);
    return it == by_fp_.end() ? nullptr : &it->second;
  }

  size_t size() const { return by_fp_.size(); }

 private:
  std::map<Digest, Certificate> by_fp_;
};

namespace detail {

// A certificate announcement is trustworthy when its issuer is the already
// established UAS root (resolved through `certs` or earlier entries of the
// same block) and the issuer signature checks out. Self-signed certificates
// are only ever accepted as the genesis root itself.
inline bool announcement_valid(const Certificate& cert,
                               const CertificateIndex& certs) {
  if (cert.self_signed()) return false;
  const Certificate* issuer = certs.find(cert.issuer_fingerprint);
  if (issuer == nullptr || issuer->role != Role::uas) return false;
  return verify(issuer->public_key, certificate_signing_bytes(cert),
                cert.issuer_sig);
}

}  // namespace detail

// Checks one block against its predecessor. Structural rules (height, link,
// data digest, entry order) never need certificates; the creator signature is
// checked when `certs` is supplied, or always for genesis, whose entries make
// it self-authenticating. Entry-level signatures are a chain-walk concern,
// see verify_entry_signatures.
inline VerifyResult verify_block(const BlockHeader* prev, const Block& block,
                                 const CertificateIndex* certs = nullptr) {
  const BlockHeader& h = block.header;

  if (prev == nullptr) {
    if (h.height != 0)
      return VerifyResult::fail(VerifyStatus::bad_height,
                                "genesis height must be 0");
    if (!h.prev_header_digest.is_zero())
      return VerifyResult::fail(VerifyStatus::bad_link,
                                "genesis prev digest must be zero");
  } else {
    if (h.height != prev->height + 1)
      return VerifyResult::fail(
          VerifyStatus::bad_height,
          "expected height " + std::to_string(prev->height + 1) + " got " +
              std::to_string(h.height));
    if (h.prev_header_digest != header_digest(*prev))
      return VerifyResult::fail(VerifyStatus::bad_link,
                                "prev header digest mismatch");
    if (h.created_at < prev->created_at)
      return VerifyResult::fail(VerifyStatus::bad_order,
                                "created_at earlier than previous block");
  }

  if (block.entries.empty())
    return VerifyResult::fail(VerifyStatus::bad_order, "block has no entries");

  if (entries_digest(block.entries) != h.data_digest)
    return VerifyResult::fail(VerifyStatus::bad_data_digest,
                              "data digest mismatch");

  UnixSeconds last_stamp = std::numeric_limits<UnixSeconds>::min();
  for (const BlockEntry& e : block.entries) {
    if (const auto* stx = std::get_if<SignedTransaction>(&e)) {
      if (stx->bcs_timestamp < last_stamp)
        return VerifyResult::fail(VerifyStatus::bad_order,
                                  "transaction timestamps decrease");
      last_stamp = stx->bcs_timestamp;
    }
  }

  if (prev == nullptr) {
    // Genesis carries exactly the customer root, the UAS root, and the BCS
    // grant, making the chain verifiable from its own first block.
    if (block.entries.size() != 3)
      return VerifyResult::fail(VerifyStatus::bad_order,
                                "genesis must have exactly 3 entries");
    const auto* customer = std::get_if<Certificate>(&block.entries[0]);
    const auto* uas = std::get_if<Certificate>(&block.entries[1]);
    const auto* grant = std::get_if<PermissionRecord>(&block.entries[2]);
    if (customer == nullptr || customer->role != Role::customer)
      return VerifyResult::fail(VerifyStatus::bad_order,
                                "genesis entry 0 must be the customer root");
    if (uas == nullptr || uas->role != Role::uas || !uas->self_signed())
      return VerifyResult::fail(VerifyStatus::bad_order,
                                "genesis entry 1 must be the UAS root");
    if (grant == nullptr || grant->action != PermissionAction::grant ||
        grant->scope != PermissionScope::submit_transactions)
      return VerifyResult::fail(VerifyStatus::bad_order,
                                "genesis entry 2 must be the BCS grant");

    Digest uas_fp = fingerprint(*uas);
    if (!verify(uas->public_key, certificate_signing_bytes(*uas),
                uas->issuer_sig))
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "UAS root self-signature invalid");
    if (customer->issuer_fingerprint != uas_fp ||
        !verify(uas->public_key, certificate_signing_bytes(*customer),
                customer->issuer_sig))
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "customer root not signed by UAS");
    if (grant->issued_by != uas_fp ||
        !verify(uas->public_key, permission_signing_bytes(*grant),
                grant->uas_sig))
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "BCS grant not signed by UAS");
    if (h.creator_fingerprint != uas_fp)
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "genesis creator is not the UAS");
    if (!verify(uas->public_key, header_signing_bytes(h), h.creator_sig))
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "genesis header signature invalid");
    return VerifyResult::pass();
  }

  if (certs != nullptr) {
    // Announcements inside this block may introduce the creator's own
    // certificate, so ingest them (validated) before the header check.
    CertificateIndex scoped;
    auto resolve = [&](const Digest& fp) -> const Certificate* {
      if (const Certificate* c = scoped.find(fp)) return c;
      return certs->find(fp);
    };
    for (size_t i = 0; i < block.entries.size(); ++i) {
      const auto* cert = std::get_if<Certificate>(&block.entries[i]);
      if (cert == nullptr) continue;
      const Certificate* issuer = resolve(cert->issuer_fingerprint);
      if (cert->self_signed() || issuer == nullptr ||
          issuer->role != Role::uas ||
          !verify(issuer->public_key, certificate_signing_bytes(*cert),
                  cert->issuer_sig))
        return VerifyResult::fail(
            VerifyStatus::bad_signature,
            "certificate announcement at entry " + std::to_string(i) +
                " not signed by the UAS");
      scoped.add(*cert);
    }
    const Certificate* creator = resolve(h.creator_fingerprint);
    if (creator == nullptr)
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "creator certificate not announced");
    if (creator->role != Role::bcs)
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "creator certificate role is not bcs");
    if (!verify(creator->public_key, header_signing_bytes(h), h.creator_sig))
      return VerifyResult::fail(VerifyStatus::bad_signature,
                                "header signature invalid");
  }

  return VerifyResult::pass();
}

// Signature sweep over every entry of a block, given the certificates
// announced so far. `certs` must already include this block's announcements.
inline VerifyResult verify_entry_signatures(const Block& block,
                                            const CertificateIndex& certs,
                                            const Digest& customer_fp,
                                            const Digest& uas_fp) {
  const Certificate* customer = certs.find(customer_fp);
  const Certificate* uas = certs.find(uas_fp);
  const Certificate* creator = certs.find(block.header.creator_fingerprint);
  if (customer == nullptr || uas == nullptr || creator == nullptr)
    return VerifyResult::fail(VerifyStatus::bad_signature,
                              "root or creator certificate missing");

  for (size_t i = 0; i < block.entries.size(); ++i) {
    const BlockEntry& e = block.entries[i];
    std::string at = "entry " + std::to_string(i);
    if (const auto* stx = std::get_if<SignedTransaction>(&e)) {
      const Certificate* institution = certs.find(stx->tx.institution_id);
      if (institution == nullptr || institution->role != Role::institution)
        return VerifyResult::fail(VerifyStatus::bad_signature,
                                  at + ": institution not announced");
      Bytes tx_bytes = encode(stx->tx);
      if (!verify(institution->public_key, tx_bytes, stx->institution_sig))
        return VerifyResult::fail(VerifyStatus::bad_signature,
                                  at + ": institution signature invalid");
      if (!verify(customer->public_key, tx_bytes, stx->customer_sig))
        return VerifyResult::fail(VerifyStatus::bad_signature,
                                  at + ": customer signature invalid");
      Bytes counter = transaction_counter_signing_bytes(
          stx->tx, stx->institution_sig, stx->customer_sig,
          stx->bcs_timestamp);
      if (!verify(creator->public_key, counter, stx->bcs_sig))
        return VerifyResult::fail(VerifyStatus::bad_signature,
                                  at + ": BCS countersignature invalid");
    } else if (const auto* rec = std::get_if<PermissionRecord>(&e)) {
      if (rec->issued_by != uas_fp ||
          !verify(uas->public_key, permission_signing_bytes(*rec),
                  rec->uas_sig))
        return VerifyResult::fail(VerifyStatus::bad_signature,
                                  at + ": permission record not UAS-signed");
    } else {
      const auto& cert = std::get<Certificate>(e);
      bool genesis_root = block.header.height == 0 && cert.self_signed() &&
                          fingerprint(cert) == uas_fp;
      if (!genesis_root && !detail::announcement_valid(cert, certs))
        return VerifyResult::fail(VerifyStatus::bad_signature,
                                  at + ": announcement not UAS-signed");
    }
  }
  return VerifyResult::pass();
}

inline Block make_genesis(const Certificate& customer_cert,
                          const Certificate& uas_cert,
                          const PermissionRecord& bcs_grant,
                          const KeyPair& uas_keypair, UnixSeconds now) {
  if (customer_cert.role != Role::customer)
    throw Error(errc::kInvalidCertificate, "customer certificate role wrong");
  if (uas_cert.role != Role::uas || !uas_cert.self_signed())
    throw Error(errc::kInvalidCertificate,
                "UAS certificate must be a self-signed root");
  if (!customer_cert.valid_at(now) || !uas_cert.valid_at(now))
    throw Error(errc::kInvalidCertificate, "certificate not valid now");
  if (uas_cert.public_key != uas_keypair.pub)
    throw Error(errc::kSignatureMismatch,
                "UAS key pair does not match UAS certificate");
  Digest uas_fp = fingerprint(uas_cert);
  if (customer_cert.issuer_fingerprint != uas_fp ||
      !verify(uas_keypair.pub, certificate_signing_bytes(customer_cert),
              customer_cert.issuer_sig))
    throw Error(errc::kSignatureMismatch, "customer root not signed by UAS");
  if (bcs_grant.issued_by != uas_fp ||
      bcs_grant.action != PermissionAction::grant ||
      !verify(uas_keypair.pub, permission_signing_bytes(bcs_grant),
              bcs_grant.uas_sig))
    throw Error(errc::kSignatureMismatch, "BCS grant not signed by UAS");

  Block b;
  b.entries = {customer_cert, uas_cert, bcs_grant};
  b.header.height = 0;
  b.header.prev_header_digest = Digest{};
  b.header.data_digest = entries_digest(b.entries);
  b.header.created_at = now;
  b.header.creator_fingerprint = uas_fp;
  b.header.creator_sig =
      sign(uas_keypair.secret, header_signing_bytes(b.header));
  return b;
}

inline Block seal_block(const BlockHeader& prev,
                        std::vector<BlockEntry> entries,
                        const KeyPair& creator_keys,
                        const Certificate& creator_cert, UnixSeconds now) {
  if (entries.empty()) throw Error(errc::kEmptyEntries, "nothing to seal");
  if (creator_cert.role != Role::bcs)
    throw Error(errc::kWrongCreatorRole,
                "block creator certificate role must be bcs",
                to_string(creator_cert.role));
  if (creator_cert.public_key != creator_keys.pub)
    throw Error(errc::kSignatureMismatch,
                "creator key pair does not match certificate");
  UnixSeconds last = std::numeric_limits<UnixSeconds>::min();
  for (const BlockEntry& e : entries) {
    if (const auto* stx = std::get_if<SignedTransaction>(&e)) {
      if (stx->bcs_timestamp < last)
        throw Error(errc::kNonMonotonicTimestamps,
                    "transaction timestamps must be non-decreasing");
      last = stx->bcs_timestamp;
    }
  }

  Block b;
  b.entries = std::move(entries);
  b.header.height = prev.height + 1;
  b.header.prev_header_digest = header_digest(prev);
  b.header.data_digest = entries_digest(b.entries);
  // The chain keeps created_at non-decreasing even if the clock stalls.
  b.header.created_at = std::max(now, prev.created_at);
  b.header.creator_fingerprint = fingerprint(creator_cert);
  b.header.creator_sig =
      sign(creator_keys.secret, header_signing_bytes(b.header));
  return b;
}

// Incremental chain walker: verifies blocks in order while accumulating the
// announced certificates and the roots needed for entry-signature sweeps.
class ChainCursor {
 public:
  VerifyResult advance(const Block& block) {
    const BlockHeader* prev = head_ ? &*head_ : nullptr;
    VerifyResult r = verify_block(prev, block, &certs_);
    if (!r.ok()) return r;
    if (prev == nullptr) {
      customer_fp_ = fingerprint(std::get<Certificate>(block.entries[0]));
      uas_fp_ = fingerprint(std::get<Certificate>(block.entries[1]));
    }
    for (const BlockEntry& e : block.entries)
      if (const auto* cert = std::get_if<Certificate>(&e)) certs_.add(*cert);
    head_ = block.header;
    return VerifyResult::pass();
  }

  uint64_t next_height() const { return head_ ? head_->height + 1 : 0; }
  const BlockHeader* head() const { return head_ ? &*head_ : nullptr; }
  const CertificateIndex& certs() const { return certs_; }
  const Digest& customer_fingerprint() const { return customer_fp_; }
  const Digest& uas_fingerprint() const { return uas_fp_; }

 private:
  std::optional<BlockHeader> head_;
  CertificateIndex certs_;
  Digest customer_fp_;
  Digest uas_fp_;
};

}  // namespace perch

#endif  // PERCH_BLOCK_HPP_
