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

#ifndef PERCH_REPORTING_HPP_
#define PERCH_REPORTING_HPP_

#include "perch/api.hpp"
#include "perch/time.hpp"

namespace perch::report {

struct IntegrityReport {
  bool ok = false;
  uint64_t chain_length = 0;
  Digest head_digest;  // zero while the chain is unreadable/empty
  std::optional<uint64_t> first_bad_height;
  // One of the verify reasons, or "bad-encoding" when stored bytes no longer
  // decode at all.
  std::optional<std::string> reason;
  UnixSeconds checked_at = 0;
};

struct QueryFilter {
  UnixSeconds from = std::numeric_limits<UnixSeconds>::min();  // inclusive
  UnixSeconds to = std::numeric_limits<UnixSeconds>::max();    // inclusive
  std::optional<Digest> institution;
  std::optional<int64_t> min_amount;
  std::optional<int64_t> max_amount;
  std::string description_contains;  // empty matches everything

  void validate() const {
    if (from > to)
      throw Error(errc::kInvalidFilter, "date range bounds out of order");
    if (min_amount && max_amount && *min_amount > *max_amount)
      throw Error(errc::kInvalidFilter, "amount range bounds out of order");
  }

  bool matches(const FinancialTransaction& tx) const {
    if (tx.occurred_at < from || tx.occurred_at > to) return false;
    if (institution && tx.institution_id != *institution) return false;
    if (min_amount && tx.amount < *min_amount) return false;
    if (max_amount && tx.amount > *max_amount) return false;
    if (!description_contains.empty() &&
        tx.description.find(description_contains) == std::string::npos)
      return false;
    return true;
  }
};

struct QueryRow {
  uint64_t height = 0;
  uint32_t position = 0;  // entry index within the block
  SignedTransaction stx;
};

enum class Bucketing : uint8_t { daily = 0, monthly = 1 };

inline const char* to_string(Bucketing b) {
  return b == Bucketing::daily ? "daily" : "monthly";
}

struct CurrencyTotal {
  int64_t sum = 0;
  uint64_t count = 0;
};

// All report arithmetic is exact: minor currency units in 64-bit integers,
// one total per currency, never a float.
struct SummaryReport {
  ChainId chain;
  uint64_t chain_length = 0;
  Digest head_digest;
  Bucketing bucket = Bucketing::monthly;
  uint64_t transaction_count = 0;
  std::map<std::string, CurrencyTotal> totals;
  std::map<Digest, std::map<std::string, CurrencyTotal>> by_institution;
  std::map<std::string, std::map<std::string, CurrencyTotal>> by_bucket;
  // Cumulative amount per currency in chain order (one point per matching
  // transaction).
  std::map<std::string, std::vector<int64_t>> balance_series;
};

enum class ExportFormat : uint8_t { json_lines = 0, csv = 1 };

inline ExportFormat export_format_from_string(const std::string& s) {
  if (s == "json-lines" || s == "jsonl") return ExportFormat::json_lines;
  if (s == "csv") return ExportFormat::csv;
  throw Error(errc::kInvalidFilter, "unknown export format", s);
}

// The Reporting Service: read-only integrity verification, queries, and
// aggregation over a chain served by the gateway. It holds no signing keys;
// its fingerprint is registered at the gateway without append rights.
class Reporter {
 public:
  Reporter(GatewayApi& gateway, Digest self_fp = {})
      : gateway_(gateway), self_fp_(self_fp) {}

  const Digest& fingerprint() const { return self_fp_; }

  // Full sweep: genesis rule, every link, every data digest, the creator
  // signature of every header, and every entry signature against the
  // certificates announced so far. Stops at the first failure. Results are
  // cached per chain until the head digest moves.
  IntegrityReport verify_chain(const ChainId& chain, UnixSeconds now = 0) {
    uint64_t length = gateway_.chain_length(chain);
    std::optional<Digest> head_digest;
    if (length > 0) {
      try {
        head_digest = header_digest(gateway_.head(chain));
      } catch (const Error& e) {
        if (e.code() != errc::kDecodeError) throw;
        // stored head block no longer decodes at all
        IntegrityReport report;
        report.chain_length = length;
        report.checked_at = now;
        report.ok = false;
        report.first_bad_height = length - 1;
        report.reason = "bad-encoding";
        return report;
      }
    }
    {
      std::lock_guard lock(cache_mu_);
      auto it = cache_.find(chain);
      if (it != cache_.end() && it->second.chain_length == length &&
          head_digest && it->second.head_digest == *head_digest) {
        IntegrityReport cached = it->second;
        cached.checked_at = now;
        return cached;
      }
    }

    IntegrityReport report;
    report.chain_length = length;
    report.checked_at = now;
    if (head_digest) report.head_digest = *head_digest;

    ChainCursor cursor;
    for (uint64_t h = 0; h < length; ++h) {
      Block block;
      try {
        block = gateway_.read_block(chain, h);
      } catch (const Error& e) {
        if (e.code() != errc::kDecodeError) throw;
        report.ok = false;
        report.first_bad_height = h;
        report.reason = "bad-encoding";
        return report;
      }
      VerifyResult r = cursor.advance(block);
      if (r.ok())
        r = verify_entry_signatures(block, cursor.certs(),
                                    cursor.customer_fingerprint(),
                                    cursor.uas_fingerprint());
      if (!r.ok()) {
        report.ok = false;
        report.first_bad_height = h;
        report.reason = r.reason();
        return report;
      }
    }
    report.ok = true;
    std::lock_guard lock(cache_mu_);
    cache_[chain] = report;
    return report;
  }

  // Queries refuse to run over a chain that fails verification; a financial
  // report over partially trusted data is worse than no report.
  std::vector<QueryRow> query(const ChainId& chain, const QueryFilter& filter,
                              UnixSeconds now = 0) {
    filter.validate();
    require_intact(chain, now);
    std::vector<QueryRow> rows;
    uint64_t length = gateway_.chain_length(chain);
    for (uint64_t h = 0; h < length; ++h) {
      Block block = gateway_.read_block(chain, h);
      for (uint32_t i = 0; i < block.entries.size(); ++i) {
        const auto* stx = std::get_if<SignedTransaction>(&block.entries[i]);
        if (stx != nullptr && filter.matches(stx->tx))
          rows.push_back({h, i, *stx});
      }
    }
    return rows;
  }

  SummaryReport summarize(const ChainId& chain, Bucketing bucket,
                          UnixSeconds now = 0) {
    require_intact(chain, now);
    SummaryReport s;
    s.chain = chain;
    s.bucket = bucket;
    s.chain_length = gateway_.chain_length(chain);
    if (s.chain_length > 0) s.head_digest = header_digest(gateway_.head(chain));
    for (uint64_t h = 0; h < s.chain_length; ++h) {
      Block block = gateway_.read_block(chain, h);
      for (const BlockEntry& e : block.entries) {
        const auto* stx = std::get_if<SignedTransaction>(&e);
        if (stx == nullptr) continue;
        const FinancialTransaction& tx = stx->tx;
        std::string label = bucket == Bucketing::daily
                                ? day_label(tx.occurred_at)
                                : month_label(tx.occurred_at);
        ++s.transaction_count;
        auto& total = s.totals[tx.currency];
        total.sum += tx.amount;
        ++total.count;
        auto& inst = s.by_institution[tx.institution_id][tx.currency];
        inst.sum += tx.amount;
        ++inst.count;
        auto& bkt = s.by_bucket[label][tx.currency];
        bkt.sum += tx.amount;
        ++bkt.count;
        auto& series = s.balance_series[tx.currency];
        series.push_back((series.empty() ? 0 : series.back()) + tx.amount);
      }
    }
    return s;
  }

 private:
  void require_intact(const ChainId& chain, UnixSeconds now) {
    IntegrityReport report = verify_chain(chain, now);
    if (!report.ok)
      throw Error(errc::kTamperedChain,
                  "chain fails verification: " +
                      report.reason.value_or("unknown"),
                  "first_bad_height=" +
                      std::to_string(report.first_bad_height.value_or(0)));
  }

  GatewayApi& gateway_;
  Digest self_fp_;
  std::mutex cache_mu_;
  std::map<ChainId, IntegrityReport> cache_;
};

// --- deterministic exports ---------------------------------------------

namespace detail {

inline std::string csv_escape(const std::string& field) {
  bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

}  // namespace detail

// Fixed column order: height, position, occurred_at, bcs_timestamp,
// institution, account, amount, currency, description, external_ref.
inline std::string export_rows(std::span<const QueryRow> rows,
                               ExportFormat format) {
  std::string out;
  if (format == ExportFormat::csv) {
    out +=
        "height,position,occurred_at,bcs_timestamp,institution,account,"
        "amount,currency,description,external_ref\n";
    for (const QueryRow& r : rows) {
      const FinancialTransaction& tx = r.stx.tx;
      out += std::to_string(r.height) + "," + std::to_string(r.position) +
             "," + std::to_string(tx.occurred_at) + "," +
             std::to_string(r.stx.bcs_timestamp) + "," +
             tx.institution_id.hex() + "," +
             detail::csv_escape(tx.account_id) + "," +
             std::to_string(tx.amount) + "," +
             detail::csv_escape(tx.currency) + "," +
             detail::csv_escape(tx.description) + "," +
             detail::csv_escape(tx.external_ref) + "\n";
    }
    return out;
  }
  for (const QueryRow& r : rows) {
    const FinancialTransaction& tx = r.stx.tx;
    out += "{\"height\":" + std::to_string(r.height) +
           ",\"position\":" + std::to_string(r.position) +
           ",\"occurred_at\":" + std::to_string(tx.occurred_at) +
           ",\"bcs_timestamp\":" + std::to_string(r.stx.bcs_timestamp) +
           ",\"institution\":\"" + tx.institution_id.hex() + "\"" +
           ",\"account\":\"" + detail::json_escape(tx.account_id) + "\"" +
           ",\"amount\":" + std::to_string(tx.amount) + ",\"currency\":\"" +
           detail::json_escape(tx.currency) + "\",\"description\":\"" +
           detail::json_escape(tx.description) + "\",\"external_ref\":\"" +
           detail::json_escape(tx.external_ref) + "\"}\n";
  }
  return out;
}

// Summary rows: section,key,currency,amount,count with sections emitted in
// the order institution, bucket, total, balance; keys sorted within each.
// Balance rows carry the running series one point per row, key = index.
inline std::string export_summary(const SummaryReport& s,
                                  ExportFormat format) {
  struct Row {
    std::string section, key, currency;
    int64_t amount;
    uint64_t count;
  };
  std::vector<Row> rows;
  for (const auto& [fp, per_currency] : s.by_institution)
    for (const auto& [currency, t] : per_currency)
      rows.push_back({"institution", fp.hex(), currency, t.sum, t.count});
  for (const auto& [label, per_currency] : s.by_bucket)
    for (const auto& [currency, t] : per_currency)
      rows.push_back({"bucket", label, currency, t.sum, t.count});
  for (const auto& [currency, t] : s.totals)
    rows.push_back({"total", "total", currency, t.sum, t.count});
  for (const auto& [currency, series] : s.balance_series)
    for (size_t i = 0; i < series.size(); ++i) {
      char key[16];
      std::snprintf(key, sizeof(key), "%08zu", i);
      rows.push_back({"balance", key, currency, series[i], 1});
    }

  std::string out;
  if (format == ExportFormat::csv) {
    out += "section,key,currency,amount,count\n";
    for (const Row& r : rows)
      out += r.section + "," + detail::csv_escape(r.key) + "," +
             detail::csv_escape(r.currency) + "," + std::to_string(r.amount) +
             "," + std::to_string(r.count) + "\n";
    return out;
  }
  for (const Row& r : rows)
    out += "{\"section\":\"" + r.section + "\",\"key\":\"" +
           detail::json_escape(r.key) + "\",\"currency\":\"" +
           detail::json_escape(r.currency) +
           "\",\"amount\":" + std::to_string(r.amount) +
           ",\"count\":" + std::to_string(r.count) + "}\n";
  return out;
}

}  // namespace perch::report

#endif  // PERCH_REPORTING_HPP_
