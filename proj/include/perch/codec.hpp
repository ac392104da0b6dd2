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

// Canonical wire format. Deterministic and injective per type: fixed field
// order, big-endian fixed-width integers, length-prefixed strings, map keys
// sorted byte-wise, tagged unions. The full description lives in
// docs/wire-format.md; tests/oracle/make_goldens.py is an independent
// implementation that pins the layout via golden files.

#ifndef PERCH_CODEC_HPP_
#define PERCH_CODEC_HPP_

#include <cstring>
#include <limits>

#include "perch/crypto.hpp"
#include "perch/types.hpp"

namespace perch {

class Writer {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }

  void u32(uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<uint8_t>(v >> shift));
  }

  void u64(uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<uint8_t>(v >> shift));
  }

  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

  void raw(ByteView data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  template <size_t N>
  void fixed(const std::array<uint8_t, N>& data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
  }

  void var(ByteView data) {
    u32(static_cast<uint32_t>(data.size()));
    raw(data);
  }

  void str(std::string_view s) { var(as_bytes(s)); }

  void kv_map(const std::map<std::string, std::string>& m) {
    u32(static_cast<uint32_t>(m.size()));
    for (const auto& [k, v] : m) {  // std::map iterates in sorted key order
      str(k);
      str(v);
    }
  }

  const Bytes& bytes() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  int64_t i64() { return static_cast<int64_t>(u64()); }

  template <size_t N>
  void fixed(std::array<uint8_t, N>& out) {
    need(N);
    std::memcpy(out.data(), data_.data() + pos_, N);
    pos_ += N;
  }

  Bytes var() {
    uint32_t len = u32();
    need(len);
    Bytes out(data_.begin() + static_cast<ptrdiff_t>(pos_),
              data_.begin() + static_cast<ptrdiff_t>(pos_ + len));
    pos_ += len;
    return out;
  }

  std::string str() {
    Bytes raw = var();
    return std::string(raw.begin(), raw.end());
  }

  std::map<std::string, std::string> kv_map() {
    uint32_t count = u32();
    std::map<std::string, std::string> out;
    std::string prev;
    for (uint32_t i = 0; i < count; ++i) {
      std::string k = str();
      if (i > 0 && k <= prev)
        throw Error(errc::kDecodeError, "map keys not strictly sorted");
      std::string v = str();
      prev = k;
      out.emplace(std::move(k), std::move(v));
    }
    return out;
  }

  size_t remaining() const { return data_.size() - pos_; }
  size_t consumed() const { return pos_; }

  void expect_end() const {
    if (pos_ != data_.size())
      throw Error(errc::kDecodeError, "trailing bytes after value",
                  std::to_string(data_.size() - pos_) + " bytes");
  }

 private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n)
      throw Error(errc::kDecodeError, "input truncated");
  }

  ByteView data_;
  size_t pos_ = 0;
};

// --- per-type writers ------------------------------------------------------

inline void write(Writer& w, const Digest& d) { w.fixed(d.value); }
inline void write(Writer& w, const PublicKey& k) { w.fixed(k.value); }
inline void write(Writer& w, const Signature& s) { w.fixed(s.value); }

inline void write(Writer& w, const FinancialTransaction& tx) {
  write(w, tx.institution_id);
  w.str(tx.account_id);
  w.i64(tx.amount);
  w.str(tx.currency);
  w.i64(tx.occurred_at);
  w.str(tx.description);
  w.str(tx.external_ref);
}

inline void write(Writer& w, const SignedTransaction& stx) {
  write(w, stx.tx);
  write(w, stx.institution_sig);
  write(w, stx.customer_sig);
  w.i64(stx.bcs_timestamp);
  write(w, stx.bcs_sig);
}

inline void write(Writer& w, const PermissionRecord& r) {
  write(w, r.subject_fingerprint);
  w.u8(static_cast<uint8_t>(r.action));
  w.u8(static_cast<uint8_t>(r.scope));
  write(w, r.issued_by);
  w.i64(r.issued_at);
  write(w, r.uas_sig);
}

inline void write(Writer& w, const Certificate& c) {
  w.str(c.subject_id);
  w.u8(static_cast<uint8_t>(c.role));
  write(w, c.public_key);
  w.kv_map(c.aux);
  w.i64(c.issued_at);
  w.i64(c.expires_at);
  write(w, c.issuer_fingerprint);
  write(w, c.issuer_sig);
}

inline void write(Writer& w, const BlockEntry& e) {
  if (const auto* stx = std::get_if<SignedTransaction>(&e)) {
    w.u8(kEntryTagTransaction);
    write(w, *stx);
  } else if (const auto* rec = std::get_if<PermissionRecord>(&e)) {
    w.u8(kEntryTagPermission);
    write(w, *rec);
  } else {
    w.u8(kEntryTagCertificate);
    write(w, std::get<Certificate>(e));
  }
}

inline void write(Writer& w, const BlockHeader& h) {
  w.u64(h.height);
  write(w, h.prev_header_digest);
  write(w, h.data_digest);
  w.i64(h.created_at);
  write(w, h.creator_fingerprint);
  write(w, h.creator_sig);
}

inline void write(Writer& w, const std::vector<BlockEntry>& entries) {
  w.u32(static_cast<uint32_t>(entries.size()));
  for (const BlockEntry& e : entries) write(w, e);
}

inline void write(Writer& w, const Block& b) {
  write(w, b.header);
  write(w, b.entries);
}

inline void write(Writer& w, const ChainRegistration& r) {
  write(w, r.customer_fingerprint);
  w.str(r.backend);
  write(w, r.authorized_bcs_fingerprint);
  w.u32(static_cast<uint32_t>(r.authorized_reporting_fingerprints.size()));
  for (const Digest& d : r.authorized_reporting_fingerprints) write(w, d);
}

inline void write(Writer& w, const KeyPair& kp) {
  w.fixed(kp.secret.value);
  w.fixed(kp.pub.value);
}

template <typename T>
Bytes encode(const T& value) {
  Writer w;
  write(w, value);
  return w.take();
}

// --- per-type readers ------------------------------------------------------

inline void read(Reader& r, Digest& d) { r.fixed(d.value); }
inline void read(Reader& r, PublicKey& k) { r.fixed(k.value); }
inline void read(Reader& r, Signature& s) { r.fixed(s.value); }

inline void read(Reader& r, FinancialTransaction& tx) {
  read(r, tx.institution_id);
  tx.account_id = r.str();
  tx.amount = r.i64();
  tx.currency = r.str();
  tx.occurred_at = r.i64();
  tx.description = r.str();
  tx.external_ref = r.str();
}

inline void read(Reader& r, SignedTransaction& stx) {
  read(r, stx.tx);
  read(r, stx.institution_sig);
  read(r, stx.customer_sig);
  stx.bcs_timestamp = r.i64();
  read(r, stx.bcs_sig);
}

inline void read(Reader& r, PermissionRecord& rec) {
  read(r, rec.subject_fingerprint);
  uint8_t action = r.u8();
  if (action > 1) throw Error(errc::kDecodeError, "bad permission action tag");
  rec.action = static_cast<PermissionAction>(action);
  uint8_t scope = r.u8();
  if (scope > 1) throw Error(errc::kDecodeError, "bad permission scope tag");
  rec.scope = static_cast<PermissionScope>(scope);
  read(r, rec.issued_by);
  rec.issued_at = r.i64();
  read(r, rec.uas_sig);
}

inline void read(Reader& r, Certificate& c) {
  c.subject_id = r.str();
  uint8_t role = r.u8();
  if (role > 4) throw Error(errc::kDecodeError, "bad role tag");
  c.role = static_cast<Role>(role);
  read(r, c.public_key);
  c.aux = r.kv_map();
  c.issued_at = r.i64();
  c.expires_at = r.i64();
  read(r, c.issuer_fingerprint);
  read(r, c.issuer_sig);
}

inline void read(Reader& r, BlockEntry& e) {
  uint8_t tag = r.u8();
  switch (tag) {
    case kEntryTagTransaction: {
      SignedTransaction stx;
      read(r, stx);
      e = std::move(stx);
      break;
    }
    case kEntryTagPermission: {
      PermissionRecord rec;
      read(r, rec);
      e = std::move(rec);
      break;
    }
    case kEntryTagCertificate: {
      Certificate c;
      read(r, c);
      e = std::move(c);
      break;
    }
    default:
      throw Error(errc::kDecodeError, "bad block entry tag",
                  std::to_string(tag));
  }
}

inline void read(Reader& r, BlockHeader& h) {
  h.height = r.u64();
  read(r, h.prev_header_digest);
  read(r, h.data_digest);
  h.created_at = r.i64();
  read(r, h.creator_fingerprint);
  read(r, h.creator_sig);
}

inline void read(Reader& r, std::vector<BlockEntry>& entries) {
  uint32_t count = r.u32();
  entries.clear();
  entries.reserve(std::min<uint32_t>(count, 4096));
  for (uint32_t i = 0; i < count; ++i) {
    BlockEntry e;
    read(r, e);
    entries.push_back(std::move(e));
  }
}

inline void read(Reader& r, Block& b) {
  read(r, b.header);
  read(r, b.entries);
}

inline void read(Reader& r, ChainRegistration& reg) {
  read(r, reg.customer_fingerprint);
  reg.backend = r.str();
  read(r, reg.authorized_bcs_fingerprint);
  uint32_t count = r.u32();
  reg.authorized_reporting_fingerprints.clear();
  for (uint32_t i = 0; i < count; ++i) {
    Digest d;
    read(r, d);
    reg.authorized_reporting_fingerprints.push_back(d);
  }
}

inline void read(Reader& r, KeyPair& kp) {
  r.fixed(kp.secret.value);
  r.fixed(kp.pub.value);
}

// Decodes exactly one value; trailing bytes are an error.
template <typename T>
T decode(ByteView data) {
  Reader r(data);
  T value;
  read(r, value);
  r.expect_end();
  return value;
}

// --- signing payloads ------------------------------------------------------
// Every embedded signature covers the canonical encoding of the fields that
// precede it, so the signed bytes are always a prefix of the full encoding.

inline Bytes certificate_signing_bytes(const Certificate& c) {
  Writer w;
  w.str(c.subject_id);
  w.u8(static_cast<uint8_t>(c.role));
  write(w, c.public_key);
  w.kv_map(c.aux);
  w.i64(c.issued_at);
  w.i64(c.expires_at);
  write(w, c.issuer_fingerprint);
  return w.take();
}

inline Bytes permission_signing_bytes(const PermissionRecord& r) {
  Writer w;
  write(w, r.subject_fingerprint);
  w.u8(static_cast<uint8_t>(r.action));
  w.u8(static_cast<uint8_t>(r.scope));
  write(w, r.issued_by);
  w.i64(r.issued_at);
  return w.take();
}

inline Bytes transaction_counter_signing_bytes(const FinancialTransaction& tx,
                                               const Signature& institution_sig,
                                               const Signature& customer_sig,
                                               UnixSeconds bcs_timestamp) {
  Writer w;
  write(w, tx);
  write(w, institution_sig);
  write(w, customer_sig);
  w.i64(bcs_timestamp);
  return w.take();
}

inline Bytes header_signing_bytes(const BlockHeader& h) {
  Writer w;
  w.u64(h.height);
  write(w, h.prev_header_digest);
  write(w, h.data_digest);
  w.i64(h.created_at);
  write(w, h.creator_fingerprint);
  return w.take();
}

// Stable identity of a certificate: hash of everything except the issuer's
// signature, so re-encoding or countersigning never moves the fingerprint.
inline Digest fingerprint(const Certificate& c) {
  return chain_digest(certificate_signing_bytes(c));
}

inline Digest header_digest(const BlockHeader& h) {
  return chain_digest(encode(h));
}

inline Digest entries_digest(const std::vector<BlockEntry>& entries) {
  return chain_digest(encode(entries));
}

inline size_t encoded_size(const BlockEntry& e) { return encode(e).size(); }

}  // namespace perch

#endif  // PERCH_CODEC_HPP_
