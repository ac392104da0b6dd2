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

// Deterministic mock financial institutions. Transaction n of a profile is a
// pure function of (seed, kind, n), so any query pattern sees one immutable
// stream; the fixed mixing below never changes, unlike standard-library
// distributions which may differ across implementations.

#ifndef PERCH_FEED_HPP_
#define PERCH_FEED_HPP_

#include "perch/api.hpp"
#include "perch/codec.hpp"

namespace perch::feed {

enum class Kind : uint8_t { bank = 0, credit_card = 1, investment = 2 };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::bank: return "bank";
    case Kind::credit_card: return "credit-card";
    case Kind::investment: return "investment";
  }
  return "?";
}

inline Kind kind_from_string(const std::string& s) {
  if (s == "bank") return Kind::bank;
  if (s == "credit-card") return Kind::credit_card;
  if (s == "investment") return Kind::investment;
  throw Error(errc::kConfigError, "unknown institution kind", s);
}

// splitmix64; fixed forever for reproducible streams.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct AmountModel {
  int64_t min_minor = 100;       // magnitude bounds, minor units
  int64_t max_minor = 250000;
  uint32_t negative_permille = 500;  // probability the amount is a debit
};

// Documented per-kind parameters: credit cards are nearly all debits, banks
// mix deposits and withdrawals, investments lean toward inflows.
inline AmountModel default_amounts(Kind kind) {
  switch (kind) {
    case Kind::bank: return {100, 250000, 500};
    case Kind::credit_card: return {100, 50000, 950};
    case Kind::investment: return {1000, 1000000, 400};
  }
  return {};
}

struct InstitutionProfile {
  std::string id;          // config name, also the certificate subject
  uint64_t seed = 0;
  Kind kind = Kind::bank;
  Certificate cert;
  KeyPair keys;
  AmountModel amounts;
  uint32_t per_day = 8;    // emission rate, transactions per simulated day
  UnixSeconds base_epoch = 0;
  std::string currency = "USD";

  UnixSeconds spacing() const {
    return std::max<UnixSeconds>(1, 86400 / std::max<uint32_t>(1, per_day));
  }
  UnixSeconds occurred_at(uint64_t n) const {
    return base_epoch + static_cast<UnixSeconds>(n + 1) * spacing();
  }
};

namespace detail {

inline const char* description_word(Kind kind, uint64_t r) {
  static constexpr const char* kBank[] = {"direct deposit", "wire transfer",
                                          "atm withdrawal", "check cleared",
                                          "interest payment"};
  static constexpr const char* kCard[] = {"grocery store", "online retailer",
                                          "restaurant", "fuel station",
                                          "subscription renewal"};
  static constexpr const char* kInvest[] = {"dividend", "share purchase",
                                            "share sale", "management fee",
                                            "rebalance"};
  switch (kind) {
    case Kind::bank: return kBank[r % 5];
    case Kind::credit_card: return kCard[r % 5];
    case Kind::investment: return kInvest[r % 5];
  }
  return "";
}

}  // namespace detail

inline FinancialTransaction transaction_at(const InstitutionProfile& p,
                                           uint64_t n) {
  uint64_t base = mix64(p.seed ^ (0x9E3779B97F4A7C15ULL * (n + 1)));
  uint64_t r_amount = mix64(base + 1);
  uint64_t r_sign = mix64(base + 2);
  uint64_t r_desc = mix64(base + 3);
  uint64_t r_account = mix64(base + 4);

  FinancialTransaction tx;
  tx.institution_id = fingerprint(p.cert);
  tx.account_id =
      std::string(to_string(p.kind)) + ":" + std::to_string(r_account % 4);
  int64_t span = p.amounts.max_minor - p.amounts.min_minor + 1;
  int64_t magnitude =
      p.amounts.min_minor + static_cast<int64_t>(r_amount % span);
  bool negative = (r_sign % 1000) < p.amounts.negative_permille;
  tx.amount = negative ? -magnitude : magnitude;
  tx.currency = p.currency;
  tx.occurred_at = p.occurred_at(n);
  tx.description = detail::description_word(p.kind, r_desc);
  tx.external_ref = std::string(to_string(p.kind)) + "-" +
                    std::to_string(p.seed) + "-" + std::to_string(n);
  return tx;
}

// Transactions strictly after `since`, in sequence order, institution-signed.
inline std::vector<FeedItem> next_batch(const InstitutionProfile& p,
                                        UnixSeconds since, uint64_t count) {
  std::vector<FeedItem> out;
  out.reserve(count);
  uint64_t n = 0;
  if (since >= p.occurred_at(0)) {
    // first n with occurred_at > since
    n = static_cast<uint64_t>((since - p.base_epoch) / p.spacing());
    while (p.occurred_at(n) <= since) ++n;
    while (n > 0 && p.occurred_at(n - 1) > since) --n;
  }
  for (uint64_t i = 0; i < count; ++i) {
    FinancialTransaction tx = transaction_at(p, n + i);
    Signature sig = sign(p.keys.secret, encode(tx));
    out.push_back({std::move(tx), sig});
  }
  return out;
}

// In-process feed endpoint: a directory of institution profiles.
class FeedDirectory final : public FeedApi {
 public:
  void add(InstitutionProfile profile) {
    profiles_.insert_or_assign(profile.id, std::move(profile));
  }

  const InstitutionProfile* find(const std::string& id) const {
    auto it = profiles_.find(id);
    return it == profiles_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : profiles_) out.push_back(id);
    return out;
  }

  std::vector<FeedItem> fetch(const std::string& institution_id,
                              UnixSeconds since, uint64_t limit) override {
    const InstitutionProfile* p = find(institution_id);
    if (p == nullptr)
      throw Error(errc::kUnknownFingerprint, "unknown institution",
                  institution_id);
    return next_batch(*p, since, limit);
  }

 private:
  std::map<std::string, InstitutionProfile> profiles_;
};

}  // namespace perch::feed

#endif  // PERCH_FEED_HPP_
