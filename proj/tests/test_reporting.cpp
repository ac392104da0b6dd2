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

#include <gtest/gtest.h>

#include <random>

#include "perch/feed.hpp"
#include "perch/reporting.hpp"
#include "test_support.hpp"

namespace perch {
namespace {

using report::Bucketing;
using report::ExportFormat;
using report::IntegrityReport;
using report::QueryFilter;
using report::QueryRow;
using report::Reporter;
using testing::Institution;
using testing::Stack;
using testing::kT0;

std::filesystem::path chain_file(const Stack& s,
                                 const std::filesystem::path& state,
                                 uint64_t height) {
  char name[16];
  std::snprintf(name, sizeof(name), "%08llu.blk",
                static_cast<unsigned long long>(height));
  (void)s;
  return state / "chain" / "blocks" / name;
}

struct ReportingWorld {
  std::filesystem::path state;
  std::unique_ptr<Stack> stack;
  Institution bank, card;

  explicit ReportingWorld(const std::string& tag, int tx_count = 12) {
    state = testing::fresh_dir(tag);
    bcs::BuilderOptions opts;
    opts.auto_flush = false;
    stack = std::make_unique<Stack>(opts, "file:chain", state);
    bank = stack->make_institution("Bank");
    card = stack->make_institution("Card");
    stack->enroll(bank);
    stack->enroll(card);
    for (int i = 0; i < tx_count; ++i) {
      FinancialTransaction tx = testing::sample_tx(i, "rep");
      tx.occurred_at = kT0 + static_cast<UnixSeconds>(i) * 86400 * 10;
      stack->submit(i % 2 == 0 ? bank : card, tx);
      if (i % 4 == 3) stack->builder.flush(stack->chain, stack->tick());
    }
    if (stack->builder.queue_status(stack->chain).depth > 0)
      stack->builder.flush(stack->chain, stack->tick());
  }
};

TEST(VerifyChain, FreshChainIsOk) {
  ReportingWorld w("reporting-ok");
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  IntegrityReport r = reporter.verify_chain(w.stack->chain, kT0 + 999);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.chain_length, w.stack->gateway.chain_length(w.stack->chain));
  EXPECT_FALSE(r.first_bad_height.has_value());
  EXPECT_FALSE(r.reason.has_value());
  EXPECT_EQ(r.head_digest,
            header_digest(w.stack->gateway.head(w.stack->chain)));
  EXPECT_EQ(r.checked_at, kT0 + 999);
}

TEST(VerifyChain, ByteFlipInStoredBlockDetected) {
  ReportingWorld w("reporting-flip");
  auto path = chain_file(*w.stack, w.state, 4);
  Bytes raw;
  ASSERT_TRUE(read_file(path, raw));
  raw[raw.size() - 20] ^= 0x10;  // inside the last entry
  ASSERT_TRUE(write_file_atomic(path, raw));

  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  IntegrityReport r = reporter.verify_chain(w.stack->chain);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.first_bad_height.has_value());
  EXPECT_EQ(*r.first_bad_height, 4u);
  EXPECT_EQ(*r.reason, "bad-data-digest");
}

TEST(VerifyChain, ReSignedHeaderDetectedAsBadSignature) {
  ReportingWorld w("reporting-resign");
  auto path = chain_file(*w.stack, w.state, 5);
  Bytes raw;
  ASSERT_TRUE(read_file(path, raw));
  Block block = decode<Block>(raw);
  KeyPair rogue = testing::seeded_keys("rogue-reporter");
  block.header.creator_sig =
      sign(rogue.secret, header_signing_bytes(block.header));
  ASSERT_TRUE(write_file_atomic(path, encode(block)));

  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  IntegrityReport r = reporter.verify_chain(w.stack->chain);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(*r.first_bad_height, 5u);
  EXPECT_EQ(*r.reason, "bad-signature");
}

TEST(VerifyChain, UndecodableBlockReportedAsBadEncoding) {
  ReportingWorld w("reporting-garble");
  auto path = chain_file(*w.stack, w.state, 3);
  Bytes raw;
  ASSERT_TRUE(read_file(path, raw));
  raw.resize(raw.size() / 2);  // truncate the stored block
  ASSERT_TRUE(write_file_atomic(path, raw));
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  IntegrityReport r = reporter.verify_chain(w.stack->chain);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(*r.first_bad_height, 3u);
  EXPECT_EQ(*r.reason, "bad-encoding");
}

TEST(VerifyChain, CacheRefreshesWhenHeadMoves) {
  ReportingWorld w("reporting-cache");
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  IntegrityReport first = reporter.verify_chain(w.stack->chain);
  ASSERT_TRUE(first.ok);
  w.stack->submit(w.bank, testing::sample_tx(900, "cache"));
  w.stack->builder.flush(w.stack->chain, w.stack->tick());
  IntegrityReport second = reporter.verify_chain(w.stack->chain);
  EXPECT_TRUE(second.ok);
  EXPECT_EQ(second.chain_length, first.chain_length + 1);
  EXPECT_NE(second.head_digest, first.head_digest);
}

TEST(Query, EmptyMatchSetAndSingleDayMatch) {
  ReportingWorld w("reporting-query1");
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  QueryFilter nothing;
  nothing.from = kT0 - 2 * 86400;
  nothing.to = kT0 - 86400;
  EXPECT_TRUE(reporter.query(w.stack->chain, nothing).empty());

  // second transaction occurred at kT0 + 10 days exactly
  QueryFilter one_day;
  one_day.from = kT0 + 10 * 86400;
  one_day.to = kT0 + 10 * 86400 + 86399;
  auto rows = reporter.query(w.stack->chain, one_day);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].stx.tx.external_ref, "rep-1");
}

TEST(Query, FilterBoundsValidated) {
  ReportingWorld w("reporting-query2");
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  QueryFilter bad;
  bad.from = 10;
  bad.to = 5;
  EXPECT_THROW(reporter.query(w.stack->chain, bad), Error);
  QueryFilter bad2;
  bad2.min_amount = 100;
  bad2.max_amount = -100;
  EXPECT_THROW(reporter.query(w.stack->chain, bad2), Error);
}

TEST(Query, RandomFiltersMatchLinearScanOracle) {
  ReportingWorld w("reporting-oracle", 40);
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());

  // independent scan path: decode every block, apply the predicate directly
  std::vector<std::pair<uint64_t, SignedTransaction>> all;
  for (uint64_t h = 0; h < w.stack->gateway.chain_length(w.stack->chain); ++h) {
    Block b = w.stack->gateway.read_block(w.stack->chain, h);
    for (const BlockEntry& e : b.entries)
      if (const auto* stx = std::get_if<SignedTransaction>(&e))
        all.push_back({h, *stx});
  }
  ASSERT_EQ(all.size(), 40u);

  std::mt19937_64 rng(99);
  for (int i = 0; i < 60; ++i) {
    QueryFilter f;
    UnixSeconds a = kT0 + static_cast<UnixSeconds>(rng() % (500 * 86400));
    UnixSeconds b = kT0 + static_cast<UnixSeconds>(rng() % (500 * 86400));
    f.from = std::min(a, b);
    f.to = std::max(a, b);
    if (rng() % 3 == 0)
      f.institution = (rng() % 2 == 0) ? w.bank.fp : w.card.fp;
    if (rng() % 3 == 0) {
      int64_t lo = static_cast<int64_t>(rng() % 1000) - 500;
      int64_t hi = lo + static_cast<int64_t>(rng() % 2000);
      f.min_amount = lo;
      f.max_amount = hi;
    }
    if (rng() % 4 == 0) f.description_contains = "tx 1";

    std::vector<std::string> expected;
    for (const auto& [h, stx] : all) {
      const FinancialTransaction& tx = stx.tx;
      if (tx.occurred_at < f.from || tx.occurred_at > f.to) continue;
      if (f.institution && tx.institution_id != *f.institution) continue;
      if (f.min_amount && tx.amount < *f.min_amount) continue;
      if (f.max_amount && tx.amount > *f.max_amount) continue;
      if (!f.description_contains.empty() &&
          tx.description.find(f.description_contains) == std::string::npos)
        continue;
      expected.push_back(tx.external_ref);
    }
    std::vector<std::string> got;
    for (const QueryRow& row : reporter.query(w.stack->chain, f))
      got.push_back(row.stx.tx.external_ref);
    EXPECT_EQ(got, expected) << "filter round " << i;
  }
}

TEST(Query, RefusesTamperedChain) {
  ReportingWorld w("reporting-refuse");
  auto path = chain_file(*w.stack, w.state, 2);
  Bytes raw;
  ASSERT_TRUE(read_file(path, raw));
  raw[raw.size() - 1] ^= 1;
  ASSERT_TRUE(write_file_atomic(path, raw));
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  try {
    reporter.query(w.stack->chain, QueryFilter{});
    FAIL() << "expected TamperedChain";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kTamperedChain);
  }
}

TEST(Summary, TwoTransactionArithmetic) {
  auto state = testing::fresh_dir("summary-two");
  bcs::BuilderOptions opts;
  opts.auto_flush = false;
  Stack s(opts, "file:chain", state);
  auto bank = s.make_institution("Bank");
  s.enroll(bank);
  FinancialTransaction t1 = testing::sample_tx(0, "sum");
  t1.amount = 100;
  FinancialTransaction t2 = testing::sample_tx(1, "sum");
  t2.amount = -40;
  s.submit(bank, t1);
  s.submit(bank, t2);
  s.builder.flush(s.chain, s.tick());

  Reporter reporter(s.gateway, s.w.reporting_fp());
  report::SummaryReport sum = reporter.summarize(s.chain, Bucketing::monthly);
  EXPECT_EQ(sum.transaction_count, 2u);
  EXPECT_EQ(sum.totals.at("USD").sum, 60);
  EXPECT_EQ(sum.balance_series.at("USD"), (std::vector<int64_t>{100, 60}));
}

TEST(Summary, GenesisOnlyChainIsEmpty) {
  Stack s;
  Reporter reporter(s.gateway, s.w.reporting_fp());
  report::SummaryReport sum = reporter.summarize(s.chain, Bucketing::daily);
  EXPECT_EQ(sum.transaction_count, 0u);
  EXPECT_TRUE(sum.totals.empty());
  EXPECT_TRUE(sum.balance_series.empty());
}

TEST(Summary, BucketTotalsSumToGrandTotalExactly) {
  ReportingWorld w("summary-buckets", 30);
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  for (Bucketing b : {Bucketing::daily, Bucketing::monthly}) {
    report::SummaryReport sum = reporter.summarize(w.stack->chain, b);
    std::map<std::string, int64_t> bucket_sums;
    std::map<std::string, uint64_t> bucket_counts;
    for (const auto& [label, per_currency] : sum.by_bucket)
      for (const auto& [currency, t] : per_currency) {
        bucket_sums[currency] += t.sum;
        bucket_counts[currency] += t.count;
      }
    for (const auto& [currency, total] : sum.totals) {
      EXPECT_EQ(bucket_sums[currency], total.sum) << currency;
      EXPECT_EQ(bucket_counts[currency], total.count) << currency;
      EXPECT_EQ(sum.balance_series.at(currency).back(), total.sum);
    }
  }
}

TEST(Export, CsvQuotingAndColumnOrder) {
  std::vector<QueryRow> rows(1);
  rows[0].height = 2;
  rows[0].position = 1;
  rows[0].stx.tx.account_id = "plain";
  rows[0].stx.tx.amount = -5;
  rows[0].stx.tx.currency = "USD";
  rows[0].stx.tx.occurred_at = 77;
  rows[0].stx.bcs_timestamp = 88;
  rows[0].stx.tx.description = "has, comma and \"quotes\"\nand newline";
  rows[0].stx.tx.external_ref = "r-1";
  std::string csv = report::export_rows(rows, ExportFormat::csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "height,position,occurred_at,bcs_timestamp,institution,account,"
            "amount,currency,description,external_ref");
  EXPECT_NE(csv.find("\"has, comma and \"\"quotes\"\"\nand newline\""),
            std::string::npos)
      << csv;

  std::string jsonl = report::export_rows(rows, ExportFormat::json_lines);
  EXPECT_NE(jsonl.find("\"description\":\"has, comma and \\\"quotes\\\"\\n"),
            std::string::npos)
      << jsonl;
}

TEST(Export, DeterministicAcrossCalls) {
  ReportingWorld w("export-deterministic");
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  auto rows = reporter.query(w.stack->chain, QueryFilter{});
  report::SummaryReport sum =
      reporter.summarize(w.stack->chain, Bucketing::monthly);
  EXPECT_EQ(report::export_rows(rows, ExportFormat::csv),
            report::export_rows(rows, ExportFormat::csv));
  EXPECT_EQ(report::export_summary(sum, ExportFormat::json_lines),
            report::export_summary(sum, ExportFormat::json_lines));
  EXPECT_FALSE(report::export_summary(sum, ExportFormat::csv).empty());
}

TEST(ReadOnly, ReportingNeverMovesTheHead) {
  ReportingWorld w("reporting-readonly");
  Reporter reporter(w.stack->gateway, w.stack->w.reporting_fp());
  Digest head = header_digest(w.stack->gateway.head(w.stack->chain));
  (void)reporter.verify_chain(w.stack->chain);
  (void)reporter.query(w.stack->chain, QueryFilter{});
  (void)reporter.summarize(w.stack->chain, Bucketing::daily);
  EXPECT_EQ(header_digest(w.stack->gateway.head(w.stack->chain)), head);
  // and an append under the reporting fingerprint is refused
  Block b = w.stack->gateway.read_block(w.stack->chain, 1);
  try {
    w.stack->gateway.append_block(w.stack->chain, b,
                                  w.stack->w.reporting_fp());
    FAIL() << "expected NotAuthorized";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::kNotAuthorized);
  }
}

// --- institution feed -------------------------------------------------------

feed::InstitutionProfile test_profile(const testing::World& w,
                                      const std::string& id, uint64_t seed,
                                      feed::Kind kind) {
  feed::InstitutionProfile p;
  p.id = id;
  p.seed = seed;
  p.kind = kind;
  p.keys = testing::seeded_keys("feed-" + id);
  p.cert = w.issue_institution(id, p.keys.pub);
  p.amounts = feed::default_amounts(kind);
  p.per_day = 8;
  p.base_epoch = kT0;
  return p;
}

TEST(Feed, CountZeroGivesEmptyBatch) {
  testing::World w;
  auto p = test_profile(w, "bank-a", 1001, feed::Kind::bank);
  EXPECT_TRUE(feed::next_batch(p, 0, 0).empty());
}

TEST(Feed, DeterministicStream) {
  testing::World w;
  auto p = test_profile(w, "bank-a", 1001, feed::Kind::bank);
  auto a = feed::next_batch(p, kT0, 50);
  auto b = feed::next_batch(p, kT0, 50);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(encode(a[i].tx), encode(b[i].tx));
    EXPECT_EQ(a[i].institution_sig, b[i].institution_sig);
  }
}

TEST(Feed, SignatureSweepOverBatch) {
  testing::World w;
  auto p = test_profile(w, "card-a", 2002, feed::Kind::credit_card);
  for (const auto& item : feed::next_batch(p, 0, 100))
    EXPECT_TRUE(verify(p.keys.pub, encode(item.tx), item.institution_sig));
}

TEST(Feed, PaginationResumesAfterSince) {
  testing::World w;
  auto p = test_profile(w, "bank-a", 1001, feed::Kind::bank);
  auto first = feed::next_batch(p, 0, 10);
  ASSERT_EQ(first.size(), 10u);
  // resume exactly after transaction n: stream continues at n+1
  auto rest = feed::next_batch(p, first[3].tx.occurred_at, 3);
  ASSERT_EQ(rest.size(), 3u);
  EXPECT_EQ(encode(rest[0].tx), encode(first[4].tx));
  EXPECT_EQ(encode(rest[2].tx), encode(first[6].tx));
  for (const auto& item : rest)
    EXPECT_GT(item.tx.occurred_at, first[3].tx.occurred_at);
}

TEST(Feed, ExternalRefsNeverCollide) {
  testing::World w;
  auto p = test_profile(w, "inv-a", 3003, feed::Kind::investment);
  std::set<std::string> refs;
  std::mt19937_64 rng(5);
  UnixSeconds since = 0;
  for (int i = 0; i < 20; ++i) {
    uint64_t limit = 1 + rng() % 30;
    auto batch = feed::next_batch(p, since, limit);
    for (const auto& item : batch) {
      // refs repeat across overlapping queries but are unique per position
      refs.insert(item.tx.external_ref);
    }
    if (!batch.empty() && rng() % 2 == 0)
      since = batch.back().tx.occurred_at;  // advance past this batch
  }
  auto all = feed::next_batch(p, 0, 500);
  std::set<std::string> unique;
  for (const auto& item : all)
    EXPECT_TRUE(unique.insert(item.tx.external_ref).second)
        << item.tx.external_ref;
}

TEST(Feed, AmountSignBiasMatchesKind) {
  testing::World w;
  auto card = test_profile(w, "card-b", 42, feed::Kind::credit_card);
  auto bank = test_profile(w, "bank-b", 43, feed::Kind::bank);
  int card_neg = 0, bank_neg = 0;
  constexpr int kSamples = 10000;
  for (int i = 0; i < kSamples; ++i) {
    if (feed::transaction_at(card, static_cast<uint64_t>(i)).amount < 0)
      ++card_neg;
    if (feed::transaction_at(bank, static_cast<uint64_t>(i)).amount < 0)
      ++bank_neg;
  }
  EXPECT_GE(card_neg, kSamples * 90 / 100);
  EXPECT_GT(bank_neg, kSamples * 40 / 100);
  EXPECT_LT(bank_neg, kSamples * 60 / 100);
}

TEST(Feed, DirectoryFetchAndUnknownId) {
  testing::World w;
  feed::FeedDirectory dir;
  dir.add(test_profile(w, "bank-a", 1001, feed::Kind::bank));
  EXPECT_EQ(dir.fetch("bank-a", 0, 5).size(), 5u);
  EXPECT_THROW(dir.fetch("nobody", 0, 5), Error);
}

}  // namespace
}  // namespace perch
