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

// HTTP clients that satisfy the same interfaces as the in-process services,
// so callers cannot tell a local service from a remote endpoint.

#ifndef PERCH_HTTP_CLIENT_HPP_
#define PERCH_HTTP_CLIENT_HPP_

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "perch/api.hpp"
#include "perch/identity.hpp"
#include "perch/reporting.hpp"

namespace perch::httpapi {

namespace client_detail {

using nlohmann::json;

inline json take_json(const httplib::Result& result, const std::string& what) {
  if (!result)
    throw Error(errc::kTransportFailure,
                "no response from service: " + what,
                httplib::to_string(result.error()));
  json body = json::parse(result->body, nullptr, false);
  if (result->status >= 400) {
    if (!body.is_discarded() && body.contains("code"))
      throw Error(body["code"].get<std::string>(),
                  body.value("message", ""), body.value("detail", ""));
    throw Error(errc::kTransportFailure,
                "HTTP " + std::to_string(result->status) + " from " + what);
  }
  if (body.is_discarded())
    throw Error(errc::kDecodeError, "service returned malformed JSON", what);
  return body;
}

inline std::string take_text(const httplib::Result& result,
                             const std::string& what) {
  if (!result)
    throw Error(errc::kTransportFailure, "no response from service: " + what,
                httplib::to_string(result.error()));
  if (result->status >= 400) {
    json body = json::parse(result->body, nullptr, false);
    if (!body.is_discarded() && body.contains("code"))
      throw Error(body["code"].get<std::string>(), body.value("message", ""),
                  body.value("detail", ""));
    throw Error(errc::kTransportFailure,
                "HTTP " + std::to_string(result->status) + " from " + what);
  }
  return result->body;
}

inline Bytes b64_field(const json& body, const char* key) {
  Bytes out;
  if (!body.contains(key) ||
      !base64_decode(body[key].get<std::string>(), out))
    throw Error(errc::kDecodeError, std::string("bad field ") + key);
  return out;
}

}  // namespace client_detail

class HttpClientBase {
 public:
  explicit HttpClientBase(const std::string& endpoint) : cli_(endpoint) {
    cli_.set_connection_timeout(5);
    cli_.set_read_timeout(30);
  }

 protected:
  httplib::Client cli_;
};

class GatewayClient final : public GatewayApi, private HttpClientBase {
 public:
  using HttpClientBase::HttpClientBase;

  ChainId register_chain(const ChainRegistration& reg,
                         const Block& genesis) override {
    client_detail::json body = {
        {"registration", base64_encode(encode(reg))},
        {"genesis", base64_encode(encode(genesis))}};
    auto res = client_detail::take_json(
        cli_.Post("/chains", body.dump(), "application/json"), "gateway");
    return Digest::from_hex(res["chain"].get<std::string>());
  }

  SubmitReceipt submit_transaction(const ChainId& chain,
                                   const FinancialTransaction& tx,
                                   const Signature& institution_sig,
                                   const Signature& customer_sig,
                                   UnixSeconds now) override {
    client_detail::json body = {
        {"tx", base64_encode(encode(tx))},
        {"institution_sig", base64_encode(institution_sig.value)},
        {"customer_sig", base64_encode(customer_sig.value)},
        {"now", now}};
    auto res = client_detail::take_json(
        cli_.Post("/chains/" + chain.hex() + "/tx", body.dump(),
                  "application/json"),
        "gateway");
    return {res["accepted"].get<bool>(),
            res["queue_position"].get<uint64_t>()};
  }

  uint64_t append_block(const ChainId& chain, const Block& block,
                        const Digest& presenter) override {
    client_detail::json body = {{"block", base64_encode(encode(block))},
                                {"presenter", presenter.hex()}};
    auto res = client_detail::take_json(
        cli_.Post("/chains/" + chain.hex() + "/blocks", body.dump(),
                  "application/json"),
        "gateway");
    return res["length"].get<uint64_t>();
  }

  Block read_block(const ChainId& chain, uint64_t height) override {
    auto res = client_detail::take_json(
        cli_.Get("/chains/" + chain.hex() + "/blocks/" +
                 std::to_string(height)),
        "gateway");
    return decode<Block>(client_detail::b64_field(res, "block"));
  }

  BlockHeader head(const ChainId& chain) override {
    auto res = client_detail::take_json(
        cli_.Get("/chains/" + chain.hex() + "/head"), "gateway");
    return decode<BlockHeader>(client_detail::b64_field(res, "header"));
  }

  uint64_t chain_length(const ChainId& chain) override {
    auto res = client_detail::take_json(
        cli_.Get("/chains/" + chain.hex() + "/head"), "gateway");
    return res["length"].get<uint64_t>();
  }

  store::MigrationReport switch_backend(const ChainId& chain,
                                        const std::string& descriptor) override {
    client_detail::json body = {{"descriptor", descriptor}};
    auto res = client_detail::take_json(
        cli_.Post("/chains/" + chain.hex() + "/backend", body.dump(),
                  "application/json"),
        "gateway");
    return {res["blocks_moved"].get<uint64_t>(),
            Digest::from_hex(res["head_digest"].get<std::string>())};
  }
};

class BuilderClient final : public BuilderApi, private HttpClientBase {
 public:
  using HttpClientBase::HttpClientBase;

  SubmitReceipt submit(const ChainId& chain, const FinancialTransaction& tx,
                       const Signature& institution_sig,
                       const Signature& customer_sig,
                       UnixSeconds now) override {
    client_detail::json body = {
        {"tx", base64_encode(encode(tx))},
        {"institution_sig", base64_encode(institution_sig.value)},
        {"customer_sig", base64_encode(customer_sig.value)},
        {"now", now}};
    auto res = client_detail::take_json(
        cli_.Post("/queues/" + chain.hex() + "/tx", body.dump(),
                  "application/json"),
        "builder");
    return {res["accepted"].get<bool>(),
            res["queue_position"].get<uint64_t>()};
  }

  SubmitReceipt enqueue_record(const ChainId& chain, const BlockEntry& entry,
                               UnixSeconds now) override {
    client_detail::json body = {{"entry", base64_encode(encode(entry))},
                                {"now", now}};
    auto res = client_detail::take_json(
        cli_.Post("/queues/" + chain.hex() + "/records", body.dump(),
                  "application/json"),
        "builder");
    return {res["accepted"].get<bool>(),
            res["queue_position"].get<uint64_t>()};
  }

  QueueStatus queue_status(const ChainId& chain) override {
    auto res = client_detail::take_json(
        cli_.Get("/queues/" + chain.hex()), "builder");
    QueueStatus q;
    q.depth = res["depth"].get<uint64_t>();
    q.encoded_bytes = res["encoded_bytes"].get<uint64_t>();
    if (res.contains("oldest_timestamp"))
      q.oldest_timestamp = res["oldest_timestamp"].get<int64_t>();
    return q;
  }

  FlushOutcome flush(const ChainId& chain, UnixSeconds now) override {
    client_detail::json body = {{"now", now}};
    auto res = client_detail::take_json(
        cli_.Post("/queues/" + chain.hex() + "/flush", body.dump(),
                  "application/json"),
        "builder");
    FlushOutcome out;
    for (const auto& b : res["blocks"])
      out.blocks.push_back(
          {b["height"].get<uint64_t>(),
           Digest::from_hex(b["digest"].get<std::string>()),
           b["entries"].get<uint64_t>()});
    for (const auto& p : res["purged"])
      out.purged.push_back(
          {Digest::from_hex(p["institution"].get<std::string>()),
           p["external_ref"].get<std::string>()});
    return out;
  }
};

// Client view of the identity endpoints the CLI drives.
class IdentityClient : private HttpClientBase {
 public:
  using HttpClientBase::HttpClientBase;

  Certificate issue_institution_certificate(const std::string& name,
                                            const PublicKey& pub,
                                            const std::string& api_token_ref,
                                            UnixSeconds now,
                                            UnixSeconds validity) {
    client_detail::json body = {{"name", name},
                                {"public_key", base64_encode(pub.value)},
                                {"api_token_ref", api_token_ref},
                                {"now", now},
                                {"validity", validity}};
    auto res = client_detail::take_json(
        cli_.Post("/certs/institution", body.dump(), "application/json"),
        "identity");
    return decode<Certificate>(client_detail::b64_field(res, "certificate"));
  }

  PermissionRecord grant(const ChainId& chain, const Certificate& cert,
                         PermissionScope scope, UnixSeconds now) {
    client_detail::json body = {{"certificate", base64_encode(encode(cert))},
                                {"scope", to_string(scope)},
                                {"now", now}};
    auto res = client_detail::take_json(
        cli_.Post("/chains/" + chain.hex() + "/grants", body.dump(),
                  "application/json"),
        "identity");
    return decode<PermissionRecord>(client_detail::b64_field(res, "record"));
  }

  std::pair<PermissionRecord, bool> revoke(const ChainId& chain,
                                           const Digest& subject,
                                           PermissionScope scope,
                                           UnixSeconds now) {
    client_detail::json body = {{"fingerprint", subject.hex()},
                                {"scope", to_string(scope)},
                                {"now", now}};
    auto res = client_detail::take_json(
        cli_.Post("/chains/" + chain.hex() + "/revocations", body.dump(),
                  "application/json"),
        "identity");
    return {decode<PermissionRecord>(client_detail::b64_field(res, "record")),
            res["flagged"].get<bool>()};
  }
};

// Client view of the reporting endpoints.
class ReportingClient : private HttpClientBase {
 public:
  using HttpClientBase::HttpClientBase;

  report::IntegrityReport verify_chain(const ChainId& chain,
                                       UnixSeconds now) {
    auto res = client_detail::take_json(
        cli_.Get("/chains/" + chain.hex() + "/verify?now=" +
                 std::to_string(now)),
        "reporting");
    report::IntegrityReport r;
    r.ok = res["ok"].get<bool>();
    r.chain_length = res["chain_length"].get<uint64_t>();
    r.head_digest = Digest::from_hex(res["head_digest"].get<std::string>());
    r.checked_at = res["checked_at"].get<int64_t>();
    if (res.contains("first_bad_height"))
      r.first_bad_height = res["first_bad_height"].get<uint64_t>();
    if (res.contains("reason"))
      r.reason = res["reason"].get<std::string>();
    return r;
  }

  std::vector<report::QueryRow> query(const ChainId& chain,
                                      const report::QueryFilter& f) {
    std::string url = "/chains/" + chain.hex() + "/tx?" + filter_params(f);
    auto res = client_detail::take_json(cli_.Get(url), "reporting");
    std::vector<report::QueryRow> rows;
    for (const auto& row : res["rows"]) {
      report::QueryRow r;
      r.height = row["height"].get<uint64_t>();
      r.position = row["position"].get<uint32_t>();
      r.stx.tx.institution_id =
          Digest::from_hex(row["institution"].get<std::string>());
      r.stx.tx.account_id = row["account"].get<std::string>();
      r.stx.tx.amount = row["amount"].get<int64_t>();
      r.stx.tx.currency = row["currency"].get<std::string>();
      r.stx.tx.occurred_at = row["occurred_at"].get<int64_t>();
      r.stx.tx.description = row["description"].get<std::string>();
      r.stx.tx.external_ref = row["external_ref"].get<std::string>();
      r.stx.bcs_timestamp = row["bcs_timestamp"].get<int64_t>();
      rows.push_back(std::move(r));
    }
    return rows;
  }

  std::string export_rows(const ChainId& chain, const report::QueryFilter& f,
                          report::ExportFormat format) {
    std::string url = "/chains/" + chain.hex() + "/tx/export?" +
                      filter_params(f) + "&format=" +
                      (format == report::ExportFormat::csv ? "csv"
                                                           : "json-lines");
    return client_detail::take_text(cli_.Get(url), "reporting");
  }

  std::string export_summary(const ChainId& chain, report::Bucketing bucket,
                             report::ExportFormat format) {
    std::string url = "/chains/" + chain.hex() + "/summary/export?bucket=" +
                      std::string(to_string(bucket)) + "&format=" +
                      (format == report::ExportFormat::csv ? "csv"
                                                           : "json-lines");
    return client_detail::take_text(cli_.Get(url), "reporting");
  }

 private:
  static std::string filter_params(const report::QueryFilter& f) {
    std::string out;
    auto add = [&](const std::string& k, const std::string& v) {
      if (!out.empty()) out += "&";
      out += k + "=" + v;
    };
    if (f.from != std::numeric_limits<UnixSeconds>::min())
      add("from", std::to_string(f.from));
    if (f.to != std::numeric_limits<UnixSeconds>::max())
      add("to", std::to_string(f.to));
    if (f.institution) add("institution", f.institution->hex());
    if (f.min_amount) add("min", std::to_string(*f.min_amount));
    if (f.max_amount) add("max", std::to_string(*f.max_amount));
    if (!f.description_contains.empty()) add("q", f.description_contains);
    return out;
  }
};

class FeedClient final : public FeedApi, private HttpClientBase {
 public:
  using HttpClientBase::HttpClientBase;

  std::vector<FeedItem> fetch(const std::string& institution_id,
                              UnixSeconds since, uint64_t limit) override {
    auto res = client_detail::take_json(
        cli_.Get("/institutions/" + institution_id + "/transactions?since=" +
                 std::to_string(since) + "&limit=" + std::to_string(limit)),
        "feed");
    std::vector<FeedItem> out;
    for (const auto& item : res["transactions"]) {
      FeedItem fi;
      fi.tx = decode<FinancialTransaction>(
          client_detail::b64_field(item, "tx"));
      Bytes sig = client_detail::b64_field(item, "institution_sig");
      if (sig.size() != 64)
        throw Error(errc::kDecodeError, "bad signature length");
      std::copy(sig.begin(), sig.end(), fi.institution_sig.value.begin());
      out.push_back(std::move(fi));
    }
    return out;
  }
};

}  // namespace perch::httpapi

#endif  // PERCH_HTTP_CLIENT_HPP_
