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

// HTTP facade over the in-process services. JSON bodies carry canonical
// encodings as base64 and digests as hex; errors come back as
// {code, message, detail} with the domain error code verbatim.

#ifndef PERCH_HTTP_SERVICE_HPP_
#define PERCH_HTTP_SERVICE_HPP_

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "perch/builder.hpp"
#include "perch/feed.hpp"
#include "perch/gateway.hpp"
#include "perch/identity.hpp"
#include "perch/reporting.hpp"

namespace perch::httpapi {

using nlohmann::json;

namespace detail {

inline int status_for(const std::string& code) {
  using namespace errc;
  if (code == kUnknownChain || code == kOutOfRange ||
      code == kUnknownFingerprint)
    return 404;
  if (code == kNotAuthorized || code == kNotPermitted) return 403;
  if (code == kAlreadyRegistered || code == kDuplicateExternalRef ||
      code == kDestinationNotEmpty || code == kHeightGap ||
      code == kLinkMismatch || code == kTamperedChain)
    return 409;
  if (code == kIoFailure || code == kPublishFailed ||
      code == kTransportFailure || code == kBindFailure ||
      code == kCorruptLayout || code == kSourceCorrupt ||
      code == kBrokenChain)
    return 502;
  return 400;
}

inline void write_error(httplib::Response& res, const Error& e) {
  json body = {{"code", e.code()},
               {"message", e.message()},
               {"detail", e.detail()}};
  res.status = status_for(e.code());
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    write_error(res, e);
  } catch (const json::exception& e) {
    write_error(res, Error(errc::kDecodeError, e.what()));
  } catch (const std::exception& e) {
    write_error(res, Error(errc::kIoFailure, e.what()));
  }
}

inline json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object())
    throw Error(errc::kDecodeError, "request body is not a JSON object");
  return body;
}

inline Bytes b64_field(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    throw Error(errc::kDecodeError, std::string("missing field ") + key);
  Bytes out;
  if (!base64_decode(body[key].get<std::string>(), out))
    throw Error(errc::kDecodeError, std::string("bad base64 in ") + key);
  return out;
}

inline Digest digest_param(const std::string& hex) {
  return Digest::from_hex(hex);
}

inline Signature sig_field(const json& body, const char* key) {
  Bytes raw = b64_field(body, key);
  if (raw.size() != 64)
    throw Error(errc::kDecodeError, std::string(key) + " must be 64 bytes");
  Signature s;
  std::copy(raw.begin(), raw.end(), s.value.begin());
  return s;
}

inline UnixSeconds now_field(const json& body) {
  if (body.contains("now") && body["now"].is_number_integer())
    return body["now"].get<int64_t>();
  return static_cast<UnixSeconds>(::time(nullptr));
}

inline std::string b64(ByteView data) { return base64_encode(data); }

}  // namespace detail

// --- management gateway -------------------------------------------------

inline void mount_gateway(httplib::Server& server, GatewayApi& gateway) {
  using detail::guarded;

  server.Post("/chains", [&](const httplib::Request& req,
                             httplib::Response& res) {
    guarded(res, [&] {
      json body = detail::parse_body(req);
      auto reg =
          decode<ChainRegistration>(detail::b64_field(body, "registration"));
      auto genesis = decode<Block>(detail::b64_field(body, "genesis"));
      ChainId chain = gateway.register_chain(reg, genesis);
      res.set_content(json{{"chain", chain.hex()}}.dump(),
                      "application/json");
    });
  });

  server.Post(R"(/chains/([0-9a-f]{64})/tx)", [&](const httplib::Request& req,
                                                  httplib::Response& res) {
    guarded(res, [&] {
      json body = detail::parse_body(req);
      auto tx =
          decode<FinancialTransaction>(detail::b64_field(body, "tx"));
      SubmitReceipt receipt = gateway.submit_transaction(
          detail::digest_param(req.matches[1]), tx,
          detail::sig_field(body, "institution_sig"),
          detail::sig_field(body, "customer_sig"), detail::now_field(body));
      res.set_content(json{{"accepted", receipt.accepted},
                           {"queue_position", receipt.queue_position}}
                          .dump(),
                      "application/json");
    });
  });

  server.Post(R"(/chains/([0-9a-f]{64})/blocks)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  json body = detail::parse_body(req);
                  auto block = decode<Block>(detail::b64_field(body, "block"));
                  if (!body.contains("presenter"))
                    throw Error(errc::kDecodeError, "missing field presenter");
                  uint64_t length = gateway.append_block(
                      detail::digest_param(req.matches[1]), block,
                      detail::digest_param(body["presenter"]));
                  res.set_content(json{{"length", length}}.dump(),
                                  "application/json");
                });
              });

  server.Get(R"(/chains/([0-9a-f]{64})/blocks/(\d+))",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 Block block =
                     gateway.read_block(detail::digest_param(req.matches[1]),
                                        std::stoull(req.matches[2]));
                 res.set_content(
                     json{{"block", detail::b64(encode(block))}}.dump(),
                     "application/json");
               });
             });

  server.Get(R"(/chains/([0-9a-f]{64})/head)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 ChainId chain = detail::digest_param(req.matches[1]);
                 BlockHeader head = gateway.head(chain);
                 res.set_content(
                     json{{"header", detail::b64(encode(head))},
                          {"height", head.height},
                          {"digest", header_digest(head).hex()},
                          {"length", gateway.chain_length(chain)}}
                         .dump(),
                     "application/json");
               });
             });

  server.Post(R"(/chains/([0-9a-f]{64})/backend)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  json body = detail::parse_body(req);
                  if (!body.contains("descriptor"))
                    throw Error(errc::kDecodeError,
                                "missing field descriptor");
                  store::MigrationReport report = gateway.switch_backend(
                      detail::digest_param(req.matches[1]),
                      body["descriptor"].get<std::string>());
                  res.set_content(
                      json{{"blocks_moved", report.blocks_moved},
                           {"head_digest", report.head_digest.hex()}}
                          .dump(),
                      "application/json");
                });
              });
}

// --- identity service --------------------------------------------------

inline void mount_identity(httplib::Server& server,
                           const uas::IdentityService& identity,
                           GatewayApi& gateway, BuilderApi& builder) {
  using detail::guarded;

  server.Post("/certs/institution", [&](const httplib::Request& req,
                                        httplib::Response& res) {
    guarded(res, [&] {
      json body = detail::parse_body(req);
      Bytes pk = detail::b64_field(body, "public_key");
      if (pk.size() != 32)
        throw Error(errc::kDecodeError, "public_key must be 32 bytes");
      PublicKey pub;
      std::copy(pk.begin(), pk.end(), pub.value.begin());
      Certificate cert = identity.issue_institution_certificate(
          body.value("name", ""), pub, body.value("api_token_ref", ""),
          detail::now_field(body),
          body.value("validity", static_cast<int64_t>(365 * 86400)));
      res.set_content(
          json{{"certificate", detail::b64(encode(cert))},
               {"fingerprint", fingerprint(cert).hex()}}
              .dump(),
          "application/json");
    });
  });

  server.Post(R"(/chains/([0-9a-f]{64})/grants)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  json body = detail::parse_body(req);
                  auto cert = decode<Certificate>(
                      detail::b64_field(body, "certificate"));
                  uas::GrantResult r = identity.grant(
                      gateway, builder, detail::digest_param(req.matches[1]),
                      cert, scope_from_string(body.value(
                                "scope", "submit-transactions")),
                      detail::now_field(body));
                  res.set_content(
                      json{{"record", detail::b64(encode(r.record))},
                           {"announced", r.announced}}
                          .dump(),
                      "application/json");
                });
              });

  server.Post(R"(/chains/([0-9a-f]{64})/revocations)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  json body = detail::parse_body(req);
                  if (!body.contains("fingerprint"))
                    throw Error(errc::kDecodeError,
                                "missing field fingerprint");
                  uas::RevokeResult r = identity.revoke(
                      gateway, builder, detail::digest_param(req.matches[1]),
                      detail::digest_param(body["fingerprint"]),
                      scope_from_string(body.value(
                          "scope", "submit-transactions")),
                      detail::now_field(body));
                  res.set_content(
                      json{{"record", detail::b64(encode(r.record))},
                           {"flagged", r.flagged}}
                          .dump(),
                      "application/json");
                });
              });

  server.Get(R"(/chains/([0-9a-f]{64})/permissions)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 std::optional<uint64_t> height;
                 if (req.has_param("height"))
                   height = std::stoull(req.get_param_value("height"));
                 uas::PermissionSet perms = uas::effective_permissions(
                     gateway, detail::digest_param(req.matches[1]), height);
                 json grants = json::array();
                 for (const auto& [fp, scopes] : perms.scopes) {
                   json names = json::array();
                   for (PermissionScope s : scopes)
                     names.push_back(to_string(s));
                   grants.push_back(
                       {{"fingerprint", fp.hex()}, {"scopes", names}});
                 }
                 res.set_content(json{{"height", perms.height},
                                      {"permissions", grants},
                                      {"flags", perms.replay_log}}
                                     .dump(),
                                 "application/json");
               });
             });
}

// --- block creation service -----------------------------------------------

inline void mount_builder(httplib::Server& server, BuilderApi& builder) {
  using detail::guarded;

  server.Post(R"(/queues/([0-9a-f]{64})/tx)", [&](const httplib::Request& req,
                                                  httplib::Response& res) {
    guarded(res, [&] {
      json body = detail::parse_body(req);
      auto tx = decode<FinancialTransaction>(detail::b64_field(body, "tx"));
      SubmitReceipt receipt = builder.submit(
          detail::digest_param(req.matches[1]), tx,
          detail::sig_field(body, "institution_sig"),
          detail::sig_field(body, "customer_sig"), detail::now_field(body));
      res.set_content(json{{"accepted", receipt.accepted},
                           {"queue_position", receipt.queue_position}}
                          .dump(),
                      "application/json");
    });
  });

  server.Post(R"(/queues/([0-9a-f]{64})/records)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  json body = detail::parse_body(req);
                  auto entry =
                      decode<BlockEntry>(detail::b64_field(body, "entry"));
                  SubmitReceipt receipt = builder.enqueue_record(
                      detail::digest_param(req.matches[1]), entry,
                      detail::now_field(body));
                  res.set_content(
                      json{{"accepted", receipt.accepted},
                           {"queue_position", receipt.queue_position}}
                          .dump(),
                      "application/json");
                });
              });

  server.Get(R"(/queues/([0-9a-f]{64}))", [&](const httplib::Request& req,
                                              httplib::Response& res) {
    guarded(res, [&] {
      QueueStatus q = builder.queue_status(detail::digest_param(req.matches[1]));
      json body = {{"depth", q.depth}, {"encoded_bytes", q.encoded_bytes}};
      if (q.oldest_timestamp) body["oldest_timestamp"] = *q.oldest_timestamp;
      res.set_content(body.dump(), "application/json");
    });
  });

  server.Post(R"(/queues/([0-9a-f]{64})/flush)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  json body = req.body.empty() ? json::object()
                                               : detail::parse_body(req);
                  FlushOutcome out =
                      builder.flush(detail::digest_param(req.matches[1]),
                                    detail::now_field(body));
                  json blocks = json::array();
                  for (const auto& b : out.blocks)
                    blocks.push_back({{"height", b.height},
                                      {"digest", b.header_digest.hex()},
                                      {"entries", b.entry_count}});
                  json purged = json::array();
                  for (const auto& [fp, ref] : out.purged)
                    purged.push_back(
                        {{"institution", fp.hex()}, {"external_ref", ref}});
                  res.set_content(
                      json{{"blocks", blocks}, {"purged", purged}}.dump(),
                      "application/json");
                });
              });
}

// --- reporting service ------------------------------------------------------

namespace detail {

inline report::QueryFilter filter_from_params(const httplib::Request& req) {
  report::QueryFilter f;
  if (req.has_param("from")) f.from = parse_time(req.get_param_value("from"));
  if (req.has_param("to")) f.to = parse_time(req.get_param_value("to"));
  if (req.has_param("institution"))
    f.institution = digest_param(req.get_param_value("institution"));
  if (req.has_param("min"))
    f.min_amount = std::stoll(req.get_param_value("min"));
  if (req.has_param("max"))
    f.max_amount = std::stoll(req.get_param_value("max"));
  if (req.has_param("q")) f.description_contains = req.get_param_value("q");
  return f;
}

inline json row_to_json(const report::QueryRow& r) {
  const FinancialTransaction& tx = r.stx.tx;
  return {{"height", r.height},
          {"position", r.position},
          {"occurred_at", tx.occurred_at},
          {"bcs_timestamp", r.stx.bcs_timestamp},
          {"institution", tx.institution_id.hex()},
          {"account", tx.account_id},
          {"amount", tx.amount},
          {"currency", tx.currency},
          {"description", tx.description},
          {"external_ref", tx.external_ref}};
}

inline report::Bucketing bucket_param(const httplib::Request& req) {
  std::string b = req.has_param("bucket") ? req.get_param_value("bucket")
                                          : "monthly";
  if (b == "daily") return report::Bucketing::daily;
  if (b == "monthly") return report::Bucketing::monthly;
  throw Error(errc::kInvalidFilter, "bucket must be daily or monthly", b);
}

inline const char* content_type(report::ExportFormat f) {
  return f == report::ExportFormat::csv ? "text/csv"
                                        : "application/x-ndjson";
}

}  // namespace detail

inline void mount_reporting(httplib::Server& server,
                            report::Reporter& reporter) {
  using detail::guarded;

  server.Get(R"(/chains/([0-9a-f]{64})/verify)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 UnixSeconds now =
                     req.has_param("now")
                         ? parse_time(req.get_param_value("now"))
                         : static_cast<UnixSeconds>(::time(nullptr));
                 report::IntegrityReport r = reporter.verify_chain(
                     detail::digest_param(req.matches[1]), now);
                 json body = {{"ok", r.ok},
                              {"chain_length", r.chain_length},
                              {"head_digest", r.head_digest.hex()},
                              {"checked_at", r.checked_at}};
                 if (r.first_bad_height)
                   body["first_bad_height"] = *r.first_bad_height;
                 if (r.reason) body["reason"] = *r.reason;
                 res.set_content(body.dump(), "application/json");
               });
             });

  server.Get(R"(/chains/([0-9a-f]{64})/tx/export)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 auto rows = reporter.query(
                     detail::digest_param(req.matches[1]),
                     detail::filter_from_params(req));
                 report::ExportFormat format = report::export_format_from_string(
                     req.has_param("format") ? req.get_param_value("format")
                                             : "csv");
                 res.set_content(report::export_rows(rows, format),
                                 detail::content_type(format));
               });
             });

  server.Get(R"(/chains/([0-9a-f]{64})/tx)", [&](const httplib::Request& req,
                                                 httplib::Response& res) {
    guarded(res, [&] {
      auto rows = reporter.query(detail::digest_param(req.matches[1]),
                                 detail::filter_from_params(req));
      json out = json::array();
      for (const auto& r : rows) out.push_back(detail::row_to_json(r));
      res.set_content(json{{"rows", out}}.dump(), "application/json");
    });
  });

  server.Get(R"(/chains/([0-9a-f]{64})/summary/export)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 report::SummaryReport s = reporter.summarize(
                     detail::digest_param(req.matches[1]),
                     detail::bucket_param(req));
                 report::ExportFormat format = report::export_format_from_string(
                     req.has_param("format") ? req.get_param_value("format")
                                             : "csv");
                 res.set_content(report::export_summary(s, format),
                                 detail::content_type(format));
               });
             });

  server.Get(R"(/chains/([0-9a-f]{64})/summary)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 report::SummaryReport s = reporter.summarize(
                     detail::digest_param(req.matches[1]),
                     detail::bucket_param(req));
                 json inst = json::array();
                 for (const auto& [fp, per_currency] : s.by_institution)
                   for (const auto& [currency, t] : per_currency)
                     inst.push_back({{"fingerprint", fp.hex()},
                                     {"currency", currency},
                                     {"sum", t.sum},
                                     {"count", t.count}});
                 json buckets = json::array();
                 for (const auto& [label, per_currency] : s.by_bucket)
                   for (const auto& [currency, t] : per_currency)
                     buckets.push_back({{"bucket", label},
                                        {"currency", currency},
                                        {"sum", t.sum},
                                        {"count", t.count}});
                 json totals = json::array();
                 for (const auto& [currency, t] : s.totals)
                   totals.push_back({{"currency", currency},
                                     {"sum", t.sum},
                                     {"count", t.count}});
                 json balances = json::object();
                 for (const auto& [currency, series] : s.balance_series)
                   balances[currency] = series;
                 res.set_content(json{{"chain", s.chain.hex()},
                                      {"chain_length", s.chain_length},
                                      {"head_digest", s.head_digest.hex()},
                                      {"bucket", to_string(s.bucket)},
                                      {"transaction_count",
                                       s.transaction_count},
                                      {"institutions", inst},
                                      {"buckets", buckets},
                                      {"totals", totals},
                                      {"balances", balances}}
                                     .dump(),
                                 "application/json");
               });
             });
}

// --- institution feed ---------------------------------------------------

inline void mount_feed(httplib::Server& server, FeedApi& feed) {
  using detail::guarded;
  server.Get(R"(/institutions/([A-Za-z0-9_.-]+)/transactions)",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 UnixSeconds since =
                     req.has_param("since")
                         ? parse_time(req.get_param_value("since"))
                         : 0;
                 uint64_t limit =
                     req.has_param("limit")
                         ? std::stoull(req.get_param_value("limit"))
                         : 10;
                 auto items = feed.fetch(req.matches[1], since, limit);
                 json out = json::array();
                 for (const auto& item : items)
                   out.push_back(
                       {{"tx", detail::b64(encode(item.tx))},
                        {"institution_sig",
                         detail::b64(item.institution_sig.value)}});
                 res.set_content(json{{"transactions", out}}.dump(),
                                 "application/json");
               });
             });
}

// One listening socket on its own thread; stops and joins on destruction.
class ServiceServer {
 public:
  ServiceServer() : server_(std::make_unique<httplib::Server>()) {}

  ~ServiceServer() { stop(); }

  httplib::Server& server() { return *server_; }

  void start(const std::string& host, int port) {
    if (!server_->bind_to_port(host, port))
      throw Error(errc::kBindFailure,
                  "cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }

  // Binds an ephemeral port and returns it.
  int start_any(const std::string& host) {
    int port = server_->bind_to_any_port(host);
    if (port <= 0)
      throw Error(errc::kBindFailure, "cannot bind an ephemeral port on " +
                                          host);
    port_ = port;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
  }

  void stop() {
    if (thread_.joinable()) {
      server_->stop();
      thread_.join();
    }
  }

  int port() const { return port_; }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace perch::httpapi

#endif  // PERCH_HTTP_SERVICE_HPP_
