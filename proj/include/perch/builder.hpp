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

#ifndef PERCH_BUILDER_HPP_
#define PERCH_BUILDER_HPP_

#include <deque>

#include "perch/identity.hpp"
#include "perch/time.hpp"

namespace perch::bcs {

struct MaxCount {
  uint64_t n = 1;
};
struct MaxBytes {
  uint64_t b = 1;
};
struct PeriodEnd {
  CalendarPeriod period = CalendarPeriod::month;
};

// Any-of composite: the queue flushes when any rule fires.
struct FlushPolicy {
  std::vector<std::variant<MaxCount, MaxBytes, PeriodEnd>> rules;

  static FlushPolicy count(uint64_t n) { return {{MaxCount{n}}}; }
  static FlushPolicy bytes(uint64_t b) { return {{MaxBytes{b}}}; }
  static FlushPolicy period(CalendarPeriod p) { return {{PeriodEnd{p}}}; }

  FlushPolicy& also(std::variant<MaxCount, MaxBytes, PeriodEnd> rule) {
    rules.push_back(rule);
    return *this;
  }

  // Queue-depth and byte caps a sealed block must respect (the tightest of
  // each kind); zero entries means unlimited.
  uint64_t count_cap() const {
    uint64_t cap = UINT64_MAX;
    for (const auto& r : rules)
      if (const auto* c = std::get_if<MaxCount>(&r)) cap = std::min(cap, c->n);
    return cap;
  }
  uint64_t byte_cap() const {
    uint64_t cap = UINT64_MAX;
    for (const auto& r : rules)
      if (const auto* c = std::get_if<MaxBytes>(&r)) cap = std::min(cap, c->b);
    return cap;
  }

  // Config syntax: comma-separated "count:N", "bytes:N",
  // "period:day|month|quarter".
  static FlushPolicy parse(const std::string& text) {
    FlushPolicy policy;
    size_t start = 0;
    while (start < text.size()) {
      size_t end = text.find(',', start);
      if (end == std::string::npos) end = text.size();
      std::string item = text.substr(start, end - start);
      start = end + 1;
      if (item.empty()) continue;
      size_t colon = item.find(':');
      if (colon == std::string::npos)
        throw Error(errc::kConfigError, "bad flush policy item", item);
      std::string kind = item.substr(0, colon);
      std::string arg = item.substr(colon + 1);
      if (kind == "count") {
        uint64_t n = std::stoull(arg);
        if (n < 1) throw Error(errc::kConfigError, "count must be >= 1");
        policy.rules.push_back(MaxCount{n});
      } else if (kind == "bytes") {
        uint64_t b = std::stoull(arg);
        if (b < 1) throw Error(errc::kConfigError, "bytes must be >= 1");
        policy.rules.push_back(MaxBytes{b});
      } else if (kind == "period") {
        if (arg == "day")
          policy.rules.push_back(PeriodEnd{CalendarPeriod::day});
        else if (arg == "month")
          policy.rules.push_back(PeriodEnd{CalendarPeriod::month});
        else if (arg == "quarter")
          policy.rules.push_back(PeriodEnd{CalendarPeriod::quarter});
        else
          throw Error(errc::kConfigError, "bad period", arg);
      } else {
        throw Error(errc::kConfigError, "bad flush policy kind", kind);
      }
    }
    if (policy.rules.empty())
      throw Error(errc::kConfigError, "flush policy is empty", text);
    return policy;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& r : rules) {
      if (!out.empty()) out += ",";
      if (const auto* c = std::get_if<MaxCount>(&r))
        out += "count:" + std::to_string(c->n);
      else if (const auto* b = std::get_if<MaxBytes>(&r))
        out += "bytes:" + std::to_string(b->b);
      else
        out += std::string("period:") +
               perch::to_string(std::get<PeriodEnd>(r).period);
    }
    return out;
  }
};

// Pure flush predicate over the observable queue state. MaxCount fires at
// depth >= n, MaxBytes at encoded bytes >= b, PeriodEnd once `now` reaches a
// period boundary later than the oldest queued timestamp.
inline bool should_flush(const QueueStatus& q, const FlushPolicy& policy,
                         UnixSeconds now) {
  if (q.depth == 0) return false;
  for (const auto& rule : policy.rules) {
    if (const auto* c = std::get_if<MaxCount>(&rule)) {
      if (q.depth >= c->n) return true;
    } else if (const auto* b = std::get_if<MaxBytes>(&rule)) {
      if (q.encoded_bytes >= b->b) return true;
    } else if (const auto* p = std::get_if<PeriodEnd>(&rule)) {
      if (q.oldest_timestamp &&
          next_period_boundary(*q.oldest_timestamp, p->period) <= now)
        return true;
    }
  }
  return false;
}

struct BuilderOptions {
  FlushPolicy default_policy = FlushPolicy::count(16).also(MaxBytes{1 << 20});
  // Directory for per-chain queue journals; empty keeps queues in memory
  // only (institutions can resubmit; external_ref makes that idempotent).
  std::filesystem::path journal_dir;
  bool auto_flush = true;
};

// The Block Creation Service. Validates and countersigns incoming
// transactions, keeps one pending queue per customer chain, and seals queue
// prefixes into blocks when the flush policy fires. It stores no chain data:
// everything it knows is re-read from the gateway, and losing an instance
// loses at most unflushed queue contents (or nothing, with the journal on).
class Builder final : public BuilderApi {
 public:
  using Options = BuilderOptions;

  Builder(GatewayApi& gateway, KeyPair keys, Certificate cert,
          Options options = {})
      : gateway_(gateway),
        keys_(std::move(keys)),
        cert_(std::move(cert)),
        options_(std::move(options)),
        self_fp_(perch::fingerprint(cert_)) {
    if (cert_.role != Role::bcs)
      throw Error(errc::kWrongCreatorRole,
                  "block creation service needs a bcs certificate");
    if (cert_.public_key != keys_.pub)
      throw Error(errc::kSignatureMismatch,
                  "BCS key pair does not match certificate");
    if (!options_.journal_dir.empty())
      std::filesystem::create_directories(options_.journal_dir);
  }

  const Certificate& certificate() const { return cert_; }
  const Digest& fingerprint() const { return self_fp_; }

  void set_policy(const ChainId& chain, FlushPolicy policy) {
    auto work = chain_work(chain);
    std::lock_guard lock(work->mu);
    work->policy = std::move(policy);
  }

  SubmitReceipt submit(const ChainId& chain, const FinancialTransaction& tx,
                       const Signature& institution_sig,
                       const Signature& customer_sig,
                       UnixSeconds now) override {
    auto work = chain_work(chain);
    std::lock_guard lock(work->mu);
    refresh_view(*work, chain);
    validate(tx);

    const Certificate* institution =
        work->cursor.certs().find(tx.institution_id);
    if (institution == nullptr || institution->role != Role::institution)
      throw Error(errc::kNotPermitted,
                  "institution is not announced on this chain",
                  tx.institution_id.hex());
    Bytes tx_bytes = encode(tx);
    if (!verify(institution->public_key, tx_bytes, institution_sig))
      throw Error(errc::kBadInstitutionSignature,
                  "institution signature does not verify");
    const Certificate* customer =
        work->cursor.certs().find(work->cursor.customer_fingerprint());
    if (customer == nullptr ||
        !verify(customer->public_key, tx_bytes, customer_sig))
      throw Error(errc::kBadCustomerSignature,
                  "customer signature does not verify");
    if (!institution->valid_at(now))
      throw Error(errc::kNotPermitted, "institution certificate expired");
    if (!work->perms.allows(tx.institution_id,
                            PermissionScope::submit_transactions))
      throw Error(errc::kNotPermitted,
                  "institution lacks submit-transactions scope at head");
    auto ref = std::make_pair(tx.institution_id, tx.external_ref);
    if (work->chain_refs.contains(ref) || work->queued_refs.contains(ref))
      throw Error(errc::kDuplicateExternalRef,
                  "external_ref already recorded", tx.external_ref);

    SignedTransaction stx;
    stx.tx = tx;
    stx.institution_sig = institution_sig;
    stx.customer_sig = customer_sig;
    // The queue keeps FIFO order with non-decreasing stamps even if the
    // injected clock stalls or steps back.
    UnixSeconds stamp = std::max(now, work->last_stamp);
    work->last_stamp = stamp;
    stx.bcs_timestamp = stamp;
    stx.bcs_sig = sign(keys_.secret,
                       transaction_counter_signing_bytes(
                           tx, institution_sig, customer_sig, stamp));
    push_item(*work, chain, BlockEntry(std::move(stx)), stamp);
    SubmitReceipt receipt{true, work->queue.size()};
    maybe_auto_flush(*work, chain, now);
    return receipt;
  }

  SubmitReceipt enqueue_record(const ChainId& chain, const BlockEntry& entry,
                               UnixSeconds now) override {
    auto work = chain_work(chain);
    std::lock_guard lock(work->mu);
    refresh_view(*work, chain);
    if (const auto* rec = std::get_if<PermissionRecord>(&entry)) {
      const Certificate* uas =
          work->cursor.certs().find(work->cursor.uas_fingerprint());
      if (uas == nullptr || rec->issued_by != work->cursor.uas_fingerprint() ||
          !verify(uas->public_key, permission_signing_bytes(*rec),
                  rec->uas_sig))
        throw Error(errc::kSignatureMismatch,
                    "permission record is not signed by the chain's UAS");
    } else if (const auto* cert = std::get_if<Certificate>(&entry)) {
      if (!detail::announcement_valid(*cert, work->cursor.certs()))
        throw Error(errc::kInvalidCertificate,
                    "announcement is not signed by the chain's UAS");
    } else {
      throw Error(errc::kInvalidTransaction,
                  "transactions go through submit, not enqueue_record");
    }
    push_item(*work, chain, entry, now);
    SubmitReceipt receipt{true, work->queue.size()};
    maybe_auto_flush(*work, chain, now);
    return receipt;
  }

  QueueStatus queue_status(const ChainId& chain) override {
    auto work = chain_work(chain);
    std::lock_guard lock(work->mu);
    return status_of(*work);
  }

  // Drains the queue into as many blocks as the policy's size caps require.
  // Entries from institutions revoked since enqueue are purged, not sealed.
  // On a publish failure the queue is untouched and the flush is retryable;
  // re-running with the same inputs produces byte-identical blocks.
  FlushOutcome flush(const ChainId& chain, UnixSeconds now) override {
    auto work = chain_work(chain);
    std::lock_guard lock(work->mu);
    if (work->queue.empty())
      throw Error(errc::kEmptyQueue, "nothing to flush");
    FlushOutcome outcome;
    refresh_view(*work, chain);  // also drops items that already landed
    purge_revoked(*work, chain, outcome);
    while (!work->queue.empty()) {
      seal_and_publish(*work, chain, now, outcome);
      refresh_view(*work, chain);
      purge_revoked(*work, chain, outcome);
    }
    return outcome;
  }

  // Last error a policy-triggered publish hit; manual flush retries it.
  std::string last_publish_error() {
    std::lock_guard lock(errors_mu_);
    return last_publish_error_;
  }

  // Periodic policy evaluation (for PeriodEnd rules) driven by the host.
  void tick(UnixSeconds now) {
    std::vector<ChainId> ids;
    {
      std::lock_guard lock(works_mu_);
      for (const auto& [id, _] : works_) ids.push_back(id);
    }
    for (const ChainId& id : ids) {
      auto work = chain_work(id);
      std::lock_guard lock(work->mu);
      if (!work->queue.empty() &&
          should_flush(status_of(*work), work->policy, now))
        try_flush_locked(*work, id, now);
    }
  }

 private:
  struct Item {
    BlockEntry entry;
    UnixSeconds arrival = 0;
    uint64_t bytes = 0;
  };

  struct ChainWork {
    std::mutex mu;
    std::deque<Item> queue;
    uint64_t queue_bytes = 0;
    std::set<std::pair<Digest, std::string>> queued_refs;
    ChainCursor cursor;
    uas::PermissionSet perms;
    std::set<std::pair<Digest, std::string>> chain_refs;
    FlushPolicy policy;
    UnixSeconds last_stamp = std::numeric_limits<UnixSeconds>::min();
    bool journal_loaded = false;
  };

  std::shared_ptr<ChainWork> chain_work(const ChainId& chain) {
    std::shared_ptr<ChainWork> work;
    {
      std::lock_guard lock(works_mu_);
      auto it = works_.find(chain);
      if (it == works_.end()) {
        work = std::make_shared<ChainWork>();
        work->policy = options_.default_policy;
        works_.emplace(chain, work);
      } else {
        work = it->second;
      }
    }
    std::lock_guard lock(work->mu);
    if (!work->journal_loaded) {
      work->journal_loaded = true;
      load_journal(*work, chain);
    }
    return work;
  }

  QueueStatus status_of(const ChainWork& work) const {
    QueueStatus q;
    q.depth = work.queue.size();
    q.encoded_bytes = work.queue_bytes;
    if (!work.queue.empty()) q.oldest_timestamp = work.queue.front().arrival;
    return q;
  }

  // Reads any blocks appended since the cached view and folds their
  // certificates, permissions, and external refs. Queue items whose exact
  // bytes already landed on-chain (a publish we never saw acknowledged) are
  // dropped so a retry cannot double-record them.
  void refresh_view(ChainWork& work, const ChainId& chain) {
    uint64_t length = gateway_.chain_length(chain);
    if (length < work.cursor.next_height())
      throw Error(errc::kBrokenChain,
                  "chain shrank below the verified prefix");
    for (uint64_t h = work.cursor.next_height(); h < length; ++h) {
      Block block = gateway_.read_block(chain, h);
      VerifyResult r = work.cursor.advance(block);
      if (!r.ok())
        throw Error(errc::kBrokenChain,
                    std::string("verification failed: ") + r.reason(),
                    "height " + std::to_string(h));
      bool dropped = false;
      for (const BlockEntry& e : block.entries) {
        if (const auto* stx = std::get_if<SignedTransaction>(&e))
          work.chain_refs.insert(
              {stx->tx.institution_id, stx->tx.external_ref});
        if (const auto* rec = std::get_if<PermissionRecord>(&e))
          work.perms.apply(*rec);
        dropped |= drop_landed(work, e);
      }
      work.perms.height = block.header.height;
      if (dropped) rewrite_journal(work, chain);
    }
  }

  bool drop_landed(ChainWork& work, const BlockEntry& landed) {
    Bytes landed_bytes = encode(landed);
    for (auto it = work.queue.begin(); it != work.queue.end(); ++it) {
      if (encode(it->entry) == landed_bytes) {
        forget_refs(work, it->entry);
        work.queue_bytes -= it->bytes;
        work.queue.erase(it);
        return true;
      }
    }
    return false;
  }

  void forget_refs(ChainWork& work, const BlockEntry& entry) {
    if (const auto* stx = std::get_if<SignedTransaction>(&entry))
      work.queued_refs.erase({stx->tx.institution_id, stx->tx.external_ref});
  }

  void purge_revoked(ChainWork& work, const ChainId& chain,
                     FlushOutcome& outcome) {
    // A revocation takes effect in the block that carries it, so queued
    // records count against queued transactions from the same institution.
    uas::PermissionSet effective = work.perms;
    for (const Item& item : work.queue)
      if (const auto* rec = std::get_if<PermissionRecord>(&item.entry))
        effective.apply(*rec);
    bool changed = false;
    for (auto it = work.queue.begin(); it != work.queue.end();) {
      const auto* stx = std::get_if<SignedTransaction>(&it->entry);
      if (stx != nullptr &&
          !effective.allows(stx->tx.institution_id,
                            PermissionScope::submit_transactions)) {
        outcome.purged.push_back(
            {stx->tx.institution_id, stx->tx.external_ref});
        forget_refs(work, it->entry);
        work.queue_bytes -= it->bytes;
        it = work.queue.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
    if (changed) rewrite_journal(work, chain);
  }

  void seal_and_publish(ChainWork& work, const ChainId& chain,
                        UnixSeconds now, FlushOutcome& outcome) {
    const BlockHeader* head = work.cursor.head();
    if (head == nullptr)
      throw Error(errc::kBrokenChain, "chain has no genesis");

    uint64_t count_cap = work.policy.count_cap();
    uint64_t byte_cap = work.policy.byte_cap();
    size_t take = 0;
    uint64_t bytes = 0;
    for (const Item& item : work.queue) {
      if (take >= count_cap) break;
      if (take > 0 && bytes + item.bytes > byte_cap) break;
      bytes += item.bytes;
      ++take;
    }

    std::vector<BlockEntry> entries;
    // First contact with a fresh chain: put this service's certificate on
    // the chain so verifiers can resolve the creator fingerprint.
    if (work.cursor.certs().find(self_fp_) == nullptr)
      entries.push_back(BlockEntry(cert_));
    for (size_t i = 0; i < take; ++i)
      entries.push_back(work.queue[i].entry);

    Block block = seal_block(*head, std::move(entries), keys_, cert_, now);
    uint64_t height = block.header.height;
    try {
      gateway_.append_block(chain, block, self_fp_);
    } catch (const Error& e) {
      if (e.code() == errc::kHeightGap) {
        // The block may have landed on a previous attempt whose ack we lost.
        std::optional<Block> stored = try_read(chain, height);
        if (stored && header_digest(stored->header) ==
                          header_digest(block.header)) {
          pop_sealed(work, chain, take, block, outcome);
          return;
        }
      }
      throw Error(errc::kPublishFailed,
                  "gateway did not accept the block; queue preserved",
                  e.code() + ": " + e.message());
    }
    pop_sealed(work, chain, take, block, outcome);
  }

  void pop_sealed(ChainWork& work, const ChainId& chain, size_t take,
                  const Block& block, FlushOutcome& outcome) {
    for (size_t i = 0; i < take && !work.queue.empty(); ++i) {
      forget_refs(work, work.queue.front().entry);
      work.queue_bytes -= work.queue.front().bytes;
      work.queue.pop_front();
    }
    rewrite_journal(work, chain);
    outcome.blocks.push_back({block.header.height,
                              header_digest(block.header),
                              block.entries.size()});
  }

  std::optional<Block> try_read(const ChainId& chain, uint64_t height) {
    try {
      return gateway_.read_block(chain, height);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  void push_item(ChainWork& work, const ChainId& chain, BlockEntry entry,
                 UnixSeconds arrival) {
    Item item;
    item.bytes = encoded_size(entry);
    item.entry = std::move(entry);
    item.arrival = arrival;
    if (const auto* stx = std::get_if<SignedTransaction>(&item.entry))
      work.queued_refs.insert({stx->tx.institution_id, stx->tx.external_ref});
    work.queue.push_back(std::move(item));
    work.queue_bytes += work.queue.back().bytes;
    journal_append(chain, work.queue.back());
  }

  void maybe_auto_flush(ChainWork& work, const ChainId& chain,
                        UnixSeconds now) {
    if (!options_.auto_flush) return;
    if (should_flush(status_of(work), work.policy, now))
      try_flush_locked(work, chain, now);
  }

  // Policy-triggered flush: a publish failure must not fail the submit that
  // triggered it, so the error is remembered and the queue kept.
  void try_flush_locked(ChainWork& work, const ChainId& chain,
                        UnixSeconds now) {
    try {
      FlushOutcome outcome;
      purge_revoked(work, chain, outcome);
      while (!work.queue.empty() &&
             should_flush(status_of(work), work.policy, now)) {
        seal_and_publish(work, chain, now, outcome);
        refresh_view(work, chain);
        purge_revoked(work, chain, outcome);
      }
    } catch (const Error& e) {
      std::lock_guard lock(errors_mu_);
      last_publish_error_ = e.code() + ": " + e.message();
    }
  }

  // --- queue journal -------------------------------------------------------
  // Optional durability: one file per chain of length-framed
  // (entry, arrival) records, rewritten whenever items leave the queue.

  std::filesystem::path journal_path(const ChainId& chain) const {
    return options_.journal_dir / (chain.hex() + ".queue");
  }

  void journal_append(const ChainId& chain, const Item& item) {
    if (options_.journal_dir.empty()) return;
    std::ofstream out(journal_path(chain),
                      std::ios::binary | std::ios::app);
    Bytes framed = frame(item);
    out.write(reinterpret_cast<const char*>(framed.data()),
              static_cast<std::streamsize>(framed.size()));
    if (!out.good())
      throw Error(errc::kIoFailure, "cannot write queue journal");
  }

  void rewrite_journal(ChainWork& work, const ChainId& chain) {
    if (options_.journal_dir.empty()) return;
    Writer w;
    for (const Item& item : work.queue) w.raw(frame(item));
    if (!write_file_atomic(journal_path(chain), w.bytes()))
      throw Error(errc::kIoFailure, "cannot rewrite queue journal");
  }

  static Bytes frame(const Item& item) {
    Writer inner;
    write(inner, item.entry);
    inner.i64(item.arrival);
    Writer framed;
    framed.var(inner.bytes());
    return framed.take();
  }

  void load_journal(ChainWork& work, const ChainId& chain) {
    if (options_.journal_dir.empty()) return;
    Bytes raw;
    if (!read_file(journal_path(chain), raw)) return;
    Reader outer(raw);
    while (outer.remaining() > 0) {
      Bytes frame_bytes = outer.var();
      Reader r(frame_bytes);
      Item item;
      read(r, item.entry);
      item.arrival = r.i64();
      r.expect_end();
      item.bytes = encoded_size(item.entry);
      if (const auto* stx = std::get_if<SignedTransaction>(&item.entry)) {
        work.queued_refs.insert(
            {stx->tx.institution_id, stx->tx.external_ref});
        work.last_stamp = std::max(work.last_stamp, stx->bcs_timestamp);
      }
      work.queue_bytes += item.bytes;
      work.queue.push_back(std::move(item));
    }
  }

  GatewayApi& gateway_;
  KeyPair keys_;
  Certificate cert_;
  Options options_;
  Digest self_fp_;
  std::mutex works_mu_;
  std::map<Digest, std::shared_ptr<ChainWork>> works_;
  std::mutex errors_mu_;
  std::string last_publish_error_;
};

}  // namespace perch::bcs

#endif  // PERCH_BUILDER_HPP_
