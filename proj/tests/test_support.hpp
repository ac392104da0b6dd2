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

// Shared fixtures: deterministic identities, a ready genesis, and small
// helpers for building chains both directly and through the service stack.

#ifndef PERCH_TESTS_TEST_SUPPORT_HPP_
#define PERCH_TESTS_TEST_SUPPORT_HPP_

#include <filesystem>
#include <random>
#include <string>

#include "perch/block.hpp"
#include "perch/identity.hpp"

namespace perch::testing {

inline constexpr UnixSeconds kT0 = 1704067200;  // 2024-01-01T00:00:00Z
inline constexpr UnixSeconds kYear = 365 * 86400;

inline KeyPair seeded_keys(const std::string& label) {
  Digest seed = chain_digest(as_bytes(label));
  return keypair_from_seed(seed.value);
}

// One customer, one UAS, one BCS, one reporting identity, ready genesis.
struct World {
  KeyPair uas_keys = seeded_keys("uas");
  KeyPair customer_keys = seeded_keys("customer");
  KeyPair bcs_keys = seeded_keys("bcs");
  KeyPair reporting_keys = seeded_keys("reporting");

  uas::IdentityService identity =
      uas::IdentityService::create("Test UAS", uas_keys, kT0, 10 * kYear);
  Certificate bcs_cert = identity.issue_certificate(
      "Test BCS", Role::bcs, bcs_keys.pub, {}, kT0, kT0 + 10 * kYear);
  Certificate reporting_cert =
      identity.issue_certificate("Test Reporting", Role::reporting,
                                 reporting_keys.pub, {}, kT0,
                                 kT0 + 10 * kYear);
  Certificate customer_cert;
  Block genesis;

  World() {
    auto [cert, gen] =
        identity.init_customer("Pat Example", customer_keys, bcs_cert, kT0,
                               10 * kYear);
    customer_cert = cert;
    genesis = gen;
  }

  Digest customer_fp() const { return fingerprint(customer_cert); }
  Digest bcs_fp() const { return fingerprint(bcs_cert); }
  Digest uas_fp() const { return identity.fingerprint(); }
  Digest reporting_fp() const { return fingerprint(reporting_cert); }

  Certificate issue_institution(const std::string& name,
                                const PublicKey& pub) const {
    return identity.issue_institution_certificate(name, pub,
                                                  "vault:" + name, kT0,
                                                  10 * kYear);
  }

  // Fully signed transaction entry, countersigned by the BCS key directly
  // (for chain construction that bypasses the service stack).
  SignedTransaction make_entry(const Certificate& institution_cert,
                               const KeyPair& institution_keys,
                               FinancialTransaction tx,
                               UnixSeconds stamp) const {
    tx.institution_id = fingerprint(institution_cert);
    Bytes tx_bytes = encode(tx);
    SignedTransaction stx;
    stx.tx = std::move(tx);
    stx.institution_sig = sign(institution_keys.secret, tx_bytes);
    stx.customer_sig = sign(customer_keys.secret, tx_bytes);
    stx.bcs_timestamp = stamp;
    stx.bcs_sig = sign(bcs_keys.secret,
                       transaction_counter_signing_bytes(
                           stx.tx, stx.institution_sig, stx.customer_sig,
                           stamp));
    return stx;
  }
};

inline FinancialTransaction sample_tx(uint64_t n, const std::string& ref_tag) {
  FinancialTransaction tx;
  tx.account_id = "acct-" + std::to_string(n % 3);
  tx.amount = (n % 2 == 0 ? 1 : -1) * static_cast<int64_t>(100 + n * 7);
  tx.currency = "USD";
  tx.occurred_at = kT0 + static_cast<UnixSeconds>(n) * 3600;
  tx.description = "tx " + std::to_string(n);
  tx.external_ref = ref_tag + "-" + std::to_string(n);
  return tx;
}

inline FinancialTransaction random_tx(std::mt19937_64& rng) {
  FinancialTransaction tx;
  for (auto& b : tx.institution_id.value)
    b = static_cast<uint8_t>(rng() & 0xff);
  tx.account_id = "a" + std::to_string(rng() % 1000);
  tx.amount = static_cast<int64_t>(rng()) % 1000000;
  const char* currencies[] = {"USD", "EUR", "JPY"};
  tx.currency = currencies[rng() % 3];
  tx.occurred_at = static_cast<UnixSeconds>(rng() % 4102444800LL);
  tx.description = "desc " + std::to_string(rng() % 100000);
  tx.external_ref = "ref-" + std::to_string(rng());
  return tx;
}

// Scratch directory under the build tree, wiped per call.
inline std::filesystem::path fresh_dir(const std::string& name) {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "perch-tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace perch::testing

#include "perch/builder.hpp"
#include "perch/gateway.hpp"

namespace perch::testing {

struct Institution {
  std::string name;
  KeyPair keys;
  Certificate cert;
  Digest fp;
};

// Gateway + builder wired over one registered customer chain.
struct Stack {
  World w;
  bcms::Gateway gateway;
  bcs::Builder builder;
  ChainId chain;
  UnixSeconds now = kT0 + 60;

  explicit Stack(bcs::Builder::Options options = {},
                 const std::string& backend = "mem:",
                 std::filesystem::path state_dir = {})
      : gateway(std::move(state_dir)),
        builder(gateway, w.bcs_keys, w.bcs_cert, std::move(options)) {
    gateway.set_builder(&builder);
    ChainRegistration reg;
    reg.customer_fingerprint = w.customer_fp();
    reg.backend = backend;
    reg.authorized_bcs_fingerprint = w.bcs_fp();
    reg.authorized_reporting_fingerprints = {w.reporting_fp()};
    chain = gateway.register_chain(reg, w.genesis);
  }

  UnixSeconds tick() { return ++now; }

  Institution make_institution(const std::string& name) {
    Institution inst;
    inst.name = name;
    inst.keys = seeded_keys("inst-" + name);
    inst.cert = w.issue_institution(name, inst.keys.pub);
    inst.fp = fingerprint(inst.cert);
    return inst;
  }

  // Grant + announcement ride the queue; flush lands them on-chain.
  void enroll(const Institution& inst) {
    w.identity.grant(gateway, builder, chain, inst.cert,
                     PermissionScope::submit_transactions, tick());
    builder.flush(chain, tick());
  }

  // Customer co-signs and submits through the gateway.
  SubmitReceipt submit(const Institution& inst, FinancialTransaction tx) {
    tx.institution_id = inst.fp;
    Bytes tx_bytes = encode(tx);
    Signature institution_sig = sign(inst.keys.secret, tx_bytes);
    Signature customer_sig = sign(w.customer_keys.secret, tx_bytes);
    return gateway.submit_transaction(chain, tx, institution_sig,
                                      customer_sig, tick());
  }
};

}  // namespace perch::testing

#endif  // PERCH_TESTS_TEST_SUPPORT_HPP_
