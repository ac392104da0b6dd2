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

#ifndef PERCH_TYPES_HPP_
#define PERCH_TYPES_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "perch/bytes.hpp"
#include "perch/error.hpp"

namespace perch {

// All timestamps are UTC seconds since the Unix epoch.
using UnixSeconds = int64_t;

struct Digest {
  std::array<uint8_t, 32> value{};

  auto operator<=>(const Digest&) const = default;

  bool is_zero() const {
    for (uint8_t b : value)
      if (b != 0) return false;
    return true;
  }
  std::string hex() const { return to_hex(value); }

  static Digest from_hex(std::string_view hex) {
    Bytes raw;
    if (!perch::from_hex(hex, raw) || raw.size() != 32)
      throw Error(errc::kDecodeError, "malformed digest hex");
    Digest d;
    std::copy(raw.begin(), raw.end(), d.value.begin());
    return d;
  }
};

struct PublicKey {
  std::array<uint8_t, 32> value{};
  auto operator<=>(const PublicKey&) const = default;
};

struct SecretKey {
  std::array<uint8_t, 64> value{};
  auto operator<=>(const SecretKey&) const = default;
};

struct Signature {
  std::array<uint8_t, 64> value{};
  auto operator<=>(const Signature&) const = default;
};

struct KeyPair {
  SecretKey secret;
  PublicKey pub;
};

enum class Role : uint8_t {
  customer = 0,
  institution = 1,
  bcs = 2,
  uas = 3,
  reporting = 4,
};

enum class PermissionAction : uint8_t {
  grant = 0,
  revoke = 1,
};

enum class PermissionScope : uint8_t {
  submit_transactions = 0,
  read_chain = 1,
};

inline const char* to_string(Role r) {
  switch (r) {
    case Role::customer: return "customer";
    case Role::institution: return "institution";
    case Role::bcs: return "bcs";
    case Role::uas: return "uas";
    case Role::reporting: return "reporting";
  }
  return "?";
}

inline const char* to_string(PermissionScope s) {
  switch (s) {
    case PermissionScope::submit_transactions: return "submit-transactions";
    case PermissionScope::read_chain: return "read-chain";
  }
  return "?";
}

inline PermissionScope scope_from_string(std::string_view s) {
  if (s == "submit-transactions") return PermissionScope::submit_transactions;
  if (s == "read-chain") return PermissionScope::read_chain;
  throw Error(errc::kDecodeError, "unknown permission scope",
              std::string(s));
}

struct FinancialTransaction {
  Digest institution_id;      // fingerprint of the reporting institution
  std::string account_id;
  int64_t amount = 0;         // minor currency units, signed
  std::string currency;       // ISO-4217 alphabetic code
  UnixSeconds occurred_at = 0;
  std::string description;    // UTF-8, at most 512 bytes
  std::string external_ref;   // institution-unique id

  bool operator==(const FinancialTransaction&) const = default;
};

inline constexpr size_t kMaxDescriptionBytes = 512;

// Structural validity beyond what the wire format enforces.
inline void validate(const FinancialTransaction& tx) {
  if (tx.currency.size() != 3)
    throw Error(errc::kInvalidTransaction, "currency must be 3 letters",
                tx.currency);
  for (char c : tx.currency)
    if (c < 'A' || c > 'Z')
      throw Error(errc::kInvalidTransaction,
                  "currency must be uppercase ASCII", tx.currency);
  if (tx.description.size() > kMaxDescriptionBytes)
    throw Error(errc::kInvalidTransaction, "description longer than 512 bytes");
  if (tx.external_ref.empty())
    throw Error(errc::kInvalidTransaction, "external_ref must be non-empty");
}

struct SignedTransaction {
  FinancialTransaction tx;
  Signature institution_sig;  // over encode(tx)
  Signature customer_sig;     // over encode(tx)
  UnixSeconds bcs_timestamp = 0;
  Signature bcs_sig;          // over encode(tx)||institution_sig||customer_sig||bcs_timestamp

  bool operator==(const SignedTransaction&) const = default;
};

struct PermissionRecord {
  Digest subject_fingerprint;
  PermissionAction action = PermissionAction::grant;
  PermissionScope scope = PermissionScope::submit_transactions;
  Digest issued_by;           // UAS certificate fingerprint
  UnixSeconds issued_at = 0;
  Signature uas_sig;          // over the preceding fields

  bool operator==(const PermissionRecord&) const = default;
};

struct Certificate {
  std::string subject_id;
  Role role = Role::customer;
  PublicKey public_key;
  std::map<std::string, std::string> aux;
  UnixSeconds issued_at = 0;
  UnixSeconds expires_at = 0;
  Digest issuer_fingerprint;  // all-zero for a self-signed root
  Signature issuer_sig;       // over the preceding fields

  bool operator==(const Certificate&) const = default;

  bool self_signed() const { return issuer_fingerprint.is_zero(); }
  bool valid_at(UnixSeconds t) const {
    return issued_at <= t && t < expires_at;
  }
};

// On-chain entry: a countersigned transaction, a permission change, or a
// certificate announcement that makes a fingerprint resolvable by verifiers.
using BlockEntry =
    std::variant<SignedTransaction, PermissionRecord, Certificate>;

inline constexpr uint8_t kEntryTagTransaction = 0;
inline constexpr uint8_t kEntryTagPermission = 1;
inline constexpr uint8_t kEntryTagCertificate = 2;

struct BlockHeader {
  uint64_t height = 0;
  Digest prev_header_digest;  // all-zero for genesis
  Digest data_digest;         // over the encoded entry list
  UnixSeconds created_at = 0;
  Digest creator_fingerprint;
  Signature creator_sig;      // over the preceding fields

  bool operator==(const BlockHeader&) const = default;
};

struct Block {
  BlockHeader header;
  std::vector<BlockEntry> entries;  // never empty in a valid chain

  bool operator==(const Block&) const = default;
};

// Gateway registration state for one customer chain.
struct ChainRegistration {
  Digest customer_fingerprint;
  std::string backend;  // descriptor, e.g. "mem:" or "file:chain"
  Digest authorized_bcs_fingerprint;
  std::vector<Digest> authorized_reporting_fingerprints;  // kept sorted

  bool operator==(const ChainRegistration&) const = default;
};

}  // namespace perch

#endif  // PERCH_TYPES_HPP_
