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

// Service interfaces. Each has an in-process implementation and an HTTP
// client, so callers behave identically whether the services share a process
// or run behind endpoints.

#ifndef PERCH_API_HPP_
#define PERCH_API_HPP_

#include <optional>

#include "perch/store.hpp"

namespace perch {

// Chains are addressed by the customer root certificate fingerprint.
using ChainId = Digest;

struct SubmitReceipt {
  bool accepted = false;
  uint64_t queue_position = 0;  // 1-based
};

struct QueueStatus {
  uint64_t depth = 0;
  uint64_t encoded_bytes = 0;
  std::optional<UnixSeconds> oldest_timestamp;
};

struct SealedBlockInfo {
  uint64_t height = 0;
  Digest header_digest;
  uint64_t entry_count = 0;
};

struct FlushOutcome {
  std::vector<SealedBlockInfo> blocks;
  // (institution fingerprint, external_ref) of transactions dropped because
  // the institution was revoked after enqueue.
  std::vector<std::pair<Digest, std::string>> purged;
};

class GatewayApi {
 public:
  virtual ~GatewayApi() = default;

  virtual ChainId register_chain(const ChainRegistration& reg,
                                 const Block& genesis) = 0;
  virtual SubmitReceipt submit_transaction(const ChainId& chain,
                                           const FinancialTransaction& tx,
                                           const Signature& institution_sig,
                                           const Signature& customer_sig,
                                           UnixSeconds now) = 0;
  virtual uint64_t append_block(const ChainId& chain, const Block& block,
                                const Digest& presenter) = 0;
  virtual Block read_block(const ChainId& chain, uint64_t height) = 0;
  virtual BlockHeader head(const ChainId& chain) = 0;
  virtual uint64_t chain_length(const ChainId& chain) = 0;
  virtual store::MigrationReport switch_backend(
      const ChainId& chain, const std::string& descriptor) = 0;
};

class BuilderApi {
 public:
  virtual ~BuilderApi() = default;

  virtual SubmitReceipt submit(const ChainId& chain,
                               const FinancialTransaction& tx,
                               const Signature& institution_sig,
                               const Signature& customer_sig,
                               UnixSeconds now) = 0;
  // UAS-authored permission records and certificate announcements ride the
  // same queue as transactions.
  virtual SubmitReceipt enqueue_record(const ChainId& chain,
                                       const BlockEntry& entry,
                                       UnixSeconds now) = 0;
  virtual QueueStatus queue_status(const ChainId& chain) = 0;
  virtual FlushOutcome flush(const ChainId& chain, UnixSeconds now) = 0;
};

struct FeedItem {
  FinancialTransaction tx;
  Signature institution_sig;
};

class FeedApi {
 public:
  virtual ~FeedApi() = default;

  virtual std::vector<FeedItem> fetch(const std::string& institution_id,
                                      UnixSeconds since, uint64_t limit) = 0;
};

}  // namespace perch

#endif  // PERCH_API_HPP_
